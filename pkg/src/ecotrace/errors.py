"""Exception hierarchy.

Every failure mode the toolkit reports is a subclass of EcotraceError,
grouped by the CLI exit-code contract: usage errors (exit 1) are raised
by argparse itself, data/validation errors (exit 2) derive from
DataError, and I/O or source failures (exit 3) derive from IoFailure.
"""


class EcotraceError(Exception):
    """Base class for all toolkit errors."""


class DataError(EcotraceError):
    """Invalid data or a violated domain invariant (CLI exit 2)."""


class IoFailure(EcotraceError):
    """Filesystem or external-process failure (CLI exit 3)."""


# telemetry
class MalformedLine(DataError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class NegativePower(DataError):
    pass


class PowerOutOfRange(DataError):
    pass


class UtilizationOutOfRange(DataError):
    pass


class SourceUnavailable(IoFailure):
    def __init__(self, message, exit_status=None):
        super().__init__(message)
        self.exit_status = exit_status


# timeseries
class TooFewSamples(DataError):
    pass


class NotUniform(DataError):
    pass


class EmptyTraceSet(DataError):
    pass


# carbon
class NegativeEnergy(DataError):
    pass


class EmptyHistory(DataError):
    pass


class NonPositiveValue(DataError):
    pass


class UnknownRegion(DataError):
    def __init__(self, region, known):
        super().__init__(
            f"unknown region {region!r}; known regions: {', '.join(sorted(known))}"
        )
        self.region = region
        self.known = tuple(sorted(known))


# analytics
class ZeroEnergy(DataError):
    pass


class NoCrossover(DataError):
    pass


class EmptyDeviceList(DataError):
    pass


# store
class DuplicateId(DataError):
    def __init__(self, ids):
        ids = [ids] if isinstance(ids, str) else list(ids)
        super().__init__(f"duplicate record id(s): {', '.join(ids)}")
        self.ids = tuple(ids)


class InvalidRecord(DataError):
    pass


# report
class EmptyRecordSet(DataError):
    pass


class UnsupportedFormat(DataError):
    pass


class TotalsMismatch(DataError):
    """A report's stored totals disagree with its recomputed column sums."""
