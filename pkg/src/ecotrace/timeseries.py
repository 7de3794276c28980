"""Per-GPU power traces: assembly, 1 Hz resampling, energy integration.

Energy follows the per-second rule: every sample on the 1 Hz grid
counts as one second of draw, and kWh is the sum of all watt readings
across all GPUs divided by 3,600,000. A trapezoidal alternative is
exposed for callers who want the continuous-signal integral; on a
uniform 1 Hz trace the two differ by half the first plus last reading,
i.e. about interval/duration of the total for steady draw.
"""

from __future__ import annotations

import csv
import statistics
import warnings
from array import array
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ecotrace import _kernels
from ecotrace.errors import (
    DataError,
    EmptyTraceSet,
    NotUniform,
    TooFewSamples,
)
from ecotrace.telemetry import PowerSample

WATT_SECONDS_PER_KWH = 3_600_000.0

PER_SECOND = "per-second"
TRAPEZOID = "trapezoid"


class GapWarning(UserWarning):
    """Interpolation spanned sampling outages; energy there is a guess."""

    def __init__(self, gpu_index, gaps, total_gap_s):
        super().__init__(
            f"gpu {gpu_index}: interpolated across {len(gaps)} gap(s) "
            f"totalling {total_gap_s:g} s"
        )
        self.gpu_index = gpu_index
        self.gaps = gaps
        self.total_gap_s = total_gap_s


@dataclass
class PowerTrace:
    """Ordered (timestamp, watts) series for one GPU.

    Timestamps are strictly increasing. uniform_1hz marks a trace whose
    consecutive stamps differ by exactly one second (the precondition
    for per-second integration).
    """

    gpu_index: int
    times: array = field(default_factory=lambda: array("d"))
    powers: array = field(default_factory=lambda: array("d"))
    uniform_1hz: bool = False

    def __post_init__(self):
        if len(self.times) != len(self.powers):
            raise DataError("times and powers differ in length")
        for i in range(len(self.times) - 1):
            step = self.times[i + 1] - self.times[i]
            if step <= 0:
                raise DataError(
                    f"gpu {self.gpu_index}: timestamps not strictly increasing "
                    f"at index {i + 1}"
                )
            if self.uniform_1hz and step != 1.0:
                raise DataError(
                    f"gpu {self.gpu_index}: uniform_1hz trace has a "
                    f"{step:g} s step at index {i + 1}"
                )

    @classmethod
    def from_samples(cls, gpu_index: int, samples: Iterable[tuple[float, float]]):
        ordered = sorted(samples)
        return cls(
            gpu_index=gpu_index,
            times=array("d", (t for t, _ in ordered)),
            powers=array("d", (p for _, p in ordered)),
        )

    def __len__(self):
        return len(self.times)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.powers))

    @property
    def duration_s(self) -> float:
        if len(self.times) < 2:
            return 0.0
        return self.times[-1] - self.times[0]


@dataclass
class TraceSet:
    """All traces of one workstation, sharing a single clock origin."""

    traces: dict[int, PowerTrace]
    workstation_label: str = ""
    nominal_interval_s: float = 1.0
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.nominal_interval_s <= 0:
            raise DataError("nominal_interval_s must be positive")

    def total_samples(self) -> int:
        return sum(len(t) for t in self.traces.values())


def traceset_from_samples(
    samples: Iterable[PowerSample],
    workstation_label: str = "",
    nominal_interval_s: float = 1.0,
    timestamp_source: str = "explicit",
) -> TraceSet:
    """Group samples by GPU into a TraceSet.

    timestamp_source records whether stamps came with the data, from
    the reader clock, or were synthesized during replay; downstream
    reports carry it as provenance.
    """
    by_gpu: dict[int, list[tuple[float, float]]] = {}
    for sample in samples:
        by_gpu.setdefault(sample.gpu_index, []).append(
            (sample.timestamp_s, sample.power_w)
        )
    traces = {
        gpu: PowerTrace.from_samples(gpu, pairs)
        for gpu, pairs in sorted(by_gpu.items())
    }
    return TraceSet(
        traces=traces,
        workstation_label=workstation_label,
        nominal_interval_s=nominal_interval_s,
        metadata={"timestamp_source": timestamp_source},
    )


def detect_gaps(
    trace: PowerTrace,
    factor: float = 2.0,
    nominal_interval_s: Optional[float] = None,
) -> list[tuple[float, float]]:
    """Intervals where consecutive stamps differ by more than factor x nominal.

    When nominal_interval_s is not given it is inferred as the median
    spacing, which is robust against the outage intervals themselves.
    """
    if len(trace) == 0:
        raise TooFewSamples("cannot scan an empty trace for gaps")
    if len(trace) == 1:
        return []
    if nominal_interval_s is None:
        diffs = [
            trace.times[i + 1] - trace.times[i] for i in range(len(trace) - 1)
        ]
        nominal_interval_s = statistics.median(diffs)
    return _kernels.find_gaps(trace.times, factor * nominal_interval_s)


def resample_1hz(
    trace: PowerTrace,
    nominal_interval_s: Optional[float] = None,
    gap_factor: float = 2.0,
) -> PowerTrace:
    """Linearly interpolate a trace onto the integer-second grid.

    The grid spans [ceil(first), floor(last)]: no extrapolation beyond
    the measured span. Grid points equal to an original timestamp keep
    the original value bit for bit. Outages are still interpolated, but
    a GapWarning with the total gap seconds is emitted so results can
    be flagged.
    """
    if len(trace) < 2:
        raise TooFewSamples(
            f"gpu {trace.gpu_index}: need at least 2 samples to resample, "
            f"have {len(trace)}"
        )
    gaps = detect_gaps(trace, gap_factor, nominal_interval_s)
    if gaps:
        total = sum(end - start for start, end in gaps)
        warnings.warn(GapWarning(trace.gpu_index, gaps, total), stacklevel=2)
    start, values = _kernels.resample_linear_1hz(trace.times, trace.powers)
    times = array("d", (float(start + i) for i in range(len(values))))
    return PowerTrace(
        gpu_index=trace.gpu_index,
        times=times,
        powers=values,
        uniform_1hz=True,
    )


def resample_set(trace_set: TraceSet, gap_factor: float = 2.0) -> TraceSet:
    """resample_1hz applied to every trace, preserving set metadata."""
    return TraceSet(
        traces={
            gpu: resample_1hz(t, trace_set.nominal_interval_s, gap_factor)
            for gpu, t in trace_set.traces.items()
        },
        workstation_label=trace_set.workstation_label,
        nominal_interval_s=1.0,
        metadata={**trace_set.metadata, "resampled": "linear-1hz"},
    )


def integrate_kwh(trace_set: TraceSet, method: str = PER_SECOND) -> float:
    """Total energy of the set in kWh.

    per-second (default): sum of all watt readings across all GPUs
    divided by 3,600,000; requires every trace to be on the 1 Hz grid.
    trapezoid: continuous-signal integral; works on raw spacing too.
    """
    if not trace_set.traces or trace_set.total_samples() == 0:
        raise EmptyTraceSet("no samples to integrate")
    total_ws = 0.0
    for trace in trace_set.traces.values():
        if method == PER_SECOND:
            if not trace.uniform_1hz:
                raise NotUniform(
                    f"gpu {trace.gpu_index}: trace is not on the 1 Hz grid; "
                    "resample first"
                )
            total_ws += _kernels.rect_sum(trace.powers)
        elif method == TRAPEZOID:
            if len(trace) < 2:
                raise TooFewSamples(
                    f"gpu {trace.gpu_index}: trapezoid needs at least 2 samples"
                )
            total_ws += _kernels.trap_sum(trace.times, trace.powers)
        else:
            raise ValueError(f"unknown integration method {method!r}")
    return total_ws / WATT_SECONDS_PER_KWH


def average_power(trace_set: TraceSet) -> float:
    """Mean of all readings across all GPUs, in watts.

    Deliberately a per-reading mean: the result is not multiplied by
    the GPU count, so GPUs contributing more readings weigh more.
    """
    total = 0.0
    count = 0
    for trace in trace_set.traces.values():
        total += _kernels.rect_sum(trace.powers)
        count += len(trace)
    if count == 0:
        raise EmptyTraceSet("no readings to average")
    return total / count


# --- trace CSV interchange ---------------------------------------------------

_BASE_COLUMNS = ["timestamp_s", "gpu_index", "power_w"]
_OPTIONAL_COLUMNS = ["temp_c", "sm_util_pct", "mem_util_pct"]


def write_trace_csv(path, samples: Iterable[PowerSample]) -> int:
    """Write samples as CSV; returns the number of rows written.

    Optional columns are included when any sample carries them.
    """
    rows = list(samples)
    with_optional = any(
        getattr(s, c) is not None for s in rows for c in _OPTIONAL_COLUMNS
    )
    columns = _BASE_COLUMNS + (_OPTIONAL_COLUMNS if with_optional else [])
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for s in rows:
            row = [repr(s.timestamp_s), s.gpu_index, repr(s.power_w)]
            if with_optional:
                row += [
                    "" if getattr(s, c) is None else repr(getattr(s, c))
                    for c in _OPTIONAL_COLUMNS
                ]
            writer.writerow(row)
    return len(rows)


def read_trace_csv(path) -> list[PowerSample]:
    """Read samples from CSV; the header row is mandatory."""
    samples = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty trace file (missing header)") from None
        if header[: len(_BASE_COLUMNS)] != _BASE_COLUMNS:
            raise DataError(
                f"{path}: bad header {header!r}; expected it to start with "
                f"{','.join(_BASE_COLUMNS)}"
            )
        extra = header[len(_BASE_COLUMNS):]
        if extra and extra != _OPTIONAL_COLUMNS[: len(extra)]:
            raise DataError(f"{path}: unrecognized optional columns {extra!r}")
        for row_no, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{row_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                optional = {
                    c: (float(v) if v != "" else None)
                    for c, v in zip(extra, row[3:])
                }
                samples.append(
                    PowerSample(
                        timestamp_s=float(row[0]),
                        gpu_index=int(row[1]),
                        power_w=float(row[2]),
                        **optional,
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path}:{row_no}: {exc}") from None
    return samples
