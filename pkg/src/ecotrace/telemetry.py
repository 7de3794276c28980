"""GPU power telemetry: dmon-style parsing and sample acquisition.

The vendor monitoring tool prints one whitespace-separated line of
metrics per GPU per sampling cycle, with `#`-prefixed header lines and
`-` for fields it could not read. This module turns those lines into
validated PowerSample values, either by replaying a captured log file
or by spawning a live sampler process and reading its stdout.

Parsing is total: every input line yields a sample, is skipped as a
header/blank, or raises a classified error. Nothing is dropped
silently, because a missing power reading biases energy accounting
downward without a trace.
"""

from __future__ import annotations

import shlex
import subprocess
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

from ecotrace.errors import (
    MalformedLine,
    NegativePower,
    PowerOutOfRange,
    SourceUnavailable,
    UtilizationOutOfRange,
)

# Default dmon column order. Drivers differ, so the layout is
# configuration (--columns), never an assumption baked into the parser.
DEFAULT_DMON_COLUMNS = (
    "gpu", "pwr", "gtemp", "mtemp", "sm", "mem", "enc", "dec", "mclk", "pclk",
)

# Readings above 1.2x a board's rated TDP are treated as corrupt.
TDP_CEILING_FACTOR = 1.2


@dataclass(frozen=True)
class PowerSample:
    """One timestamped per-GPU power reading.

    power_w is mandatory; thermals and utilization are optional because
    not every meter reports them. Timestamps are seconds on whatever
    clock the source used (epoch or synthetic); the trace layer owns
    uniformity.
    """

    timestamp_s: float
    gpu_index: int
    power_w: float
    temp_c: Optional[float] = None
    sm_util_pct: Optional[float] = None
    mem_util_pct: Optional[float] = None

    def with_timestamp(self, timestamp_s: float) -> "PowerSample":
        return replace(self, timestamp_s=timestamp_s)


@dataclass(frozen=True)
class GpuSpec:
    """Board specification used for sanity ceilings and documentation."""

    name: str
    cuda_cores: int
    vram_gb: float
    core_clock_mhz: float
    boost_clock_mhz: float
    transistors_millions: float
    process_nm: float
    tdp_w: float
    max_temp_c: float
    fp_gflops: float
    device_class: str  # "Desktop" or "Workstation"

    def __post_init__(self):
        if self.tdp_w <= 0:
            raise ValueError("tdp_w must be positive")
        if self.max_temp_c <= 0:
            raise ValueError("max_temp_c must be positive")

    @property
    def power_ceiling_w(self) -> float:
        return TDP_CEILING_FACTOR * self.tdp_w


_BUILTIN_GPUS = {
    "1080Ti": GpuSpec(
        name="1080Ti", cuda_cores=3584, vram_gb=11, core_clock_mhz=1481,
        boost_clock_mhz=1600, transistors_millions=11800, process_nm=16,
        tdp_w=250, max_temp_c=91, fp_gflops=11340, device_class="Desktop",
    ),
    "P100": GpuSpec(
        name="P100", cuda_cores=3584, vram_gb=16, core_clock_mhz=1190,
        boost_clock_mhz=1329, transistors_millions=15300, process_nm=16,
        tdp_w=250, max_temp_c=85, fp_gflops=10609, device_class="Workstation",
    ),
}

_gpu_registry = dict(_BUILTIN_GPUS)


def lookup_gpu(name: str) -> Optional[GpuSpec]:
    """Registered board spec, or None for an unknown model name."""
    return _gpu_registry.get(name)


def register_gpu(spec: GpuSpec) -> None:
    """Add or replace a board spec (copy-on-update, safe for readers)."""
    global _gpu_registry
    updated = dict(_gpu_registry)
    updated[spec.name] = spec
    _gpu_registry = updated


def known_gpus() -> tuple[str, ...]:
    return tuple(sorted(_gpu_registry))


def _parse_number(token: str, column: str):
    if token == "-":
        return None
    try:
        return float(token)
    except ValueError:
        raise MalformedLine(f"non-numeric value {token!r} in column {column!r}") from None


def parse_dmon_line(
    line: str, columns: Sequence[str] = DEFAULT_DMON_COLUMNS
) -> Optional[PowerSample]:
    """Parse one monitoring line into a PowerSample.

    Returns None for header (`#`), comment and blank lines. `-` tokens
    map to absent optional fields, except in the power column where a
    missing reading is an error rather than a silent zero.
    """
    if "gpu" not in columns or "pwr" not in columns:
        raise ValueError("column layout must include 'gpu' and 'pwr'")
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    tokens = stripped.split()
    if len(tokens) != len(columns):
        raise MalformedLine(
            f"expected {len(columns)} columns, got {len(tokens)}"
        )
    values = {}
    for column, token in zip(columns, tokens):
        values[column] = _parse_number(token, column)
    if values["gpu"] is None:
        raise MalformedLine("missing gpu index")
    gpu_index = values["gpu"]
    if gpu_index != int(gpu_index) or gpu_index < 0:
        raise MalformedLine(f"invalid gpu index {gpu_index!r}")
    if values["pwr"] is None:
        raise MalformedLine("missing power reading ('-' in pwr column)")
    power_w = values["pwr"]
    if power_w < 0:
        raise NegativePower(f"negative power reading {power_w} W")
    return PowerSample(
        timestamp_s=0.0,
        gpu_index=int(gpu_index),
        power_w=power_w,
        temp_c=values.get("gtemp"),
        sm_util_pct=values.get("sm"),
        mem_util_pct=values.get("mem"),
    )


def format_dmon_line(
    sample: PowerSample, columns: Sequence[str] = DEFAULT_DMON_COLUMNS
) -> str:
    """Render a sample back into the dmon layout (inverse of parse)."""
    by_column = {
        "gpu": sample.gpu_index,
        "pwr": sample.power_w,
        "gtemp": sample.temp_c,
        "sm": sample.sm_util_pct,
        "mem": sample.mem_util_pct,
    }
    cells = []
    for column in columns:
        value = by_column.get(column)
        if value is None:
            cells.append("-")
        elif value == int(value):
            cells.append(str(int(value)))
        else:
            cells.append(repr(float(value)))
    return " ".join(f"{cell:>6s}" for cell in cells)


def validate_sample(sample: PowerSample, spec: Optional[GpuSpec] = None) -> PowerSample:
    """Check sample invariants, binding the power ceiling from spec if given."""
    if sample.power_w < 0:
        raise NegativePower(f"negative power reading {sample.power_w} W")
    if spec is not None and sample.power_w > spec.power_ceiling_w:
        raise PowerOutOfRange(
            f"{sample.power_w} W exceeds {spec.power_ceiling_w:.0f} W "
            f"({TDP_CEILING_FACTOR} x TDP of {spec.name})"
        )
    for name in ("sm_util_pct", "mem_util_pct"):
        value = getattr(sample, name)
        if value is not None and not 0 <= value <= 100:
            raise UtilizationOutOfRange(f"{name}={value} outside [0, 100]")
    return sample


FILE_REPLAY = "file-replay"
PROCESS_STREAM = "process-stream"


@dataclass(frozen=True)
class TelemetrySource:
    """Where samples come from: a captured log or a live sampler command."""

    kind: str
    origin: str
    nominal_interval_s: float
    columns: Sequence[str] = field(default=DEFAULT_DMON_COLUMNS)

    def __post_init__(self):
        if self.kind not in (FILE_REPLAY, PROCESS_STREAM):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.nominal_interval_s <= 0:
            raise ValueError("nominal_interval_s must be positive")

    @classmethod
    def file_replay(cls, path, interval_s: float, columns=DEFAULT_DMON_COLUMNS):
        return cls(FILE_REPLAY, str(path), interval_s, columns)

    @classmethod
    def process_stream(cls, command: str, interval_s: float, columns=DEFAULT_DMON_COLUMNS):
        return cls(PROCESS_STREAM, command, interval_s, columns)


def _classify_parse_error(exc, line_no):
    if isinstance(exc, MalformedLine):
        return MalformedLine(str(exc), line_no=line_no)
    return type(exc)(f"line {line_no}: {exc}")


def _replay(source: TelemetrySource, start_time: float) -> Iterator[PowerSample]:
    path = Path(source.origin)
    if not path.is_file():
        raise SourceUnavailable(f"no such trace file: {path}")
    cycle = 0
    seen_this_cycle: set[int] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            try:
                sample = parse_dmon_line(line, source.columns)
            except (MalformedLine, NegativePower) as exc:
                raise _classify_parse_error(exc, line_no) from exc
            if sample is None:
                continue
            # dmon emits one line per GPU per cycle; a repeated index
            # marks the next cycle, so all GPUs in a cycle share a stamp.
            if sample.gpu_index in seen_this_cycle:
                cycle += 1
                seen_this_cycle = set()
            seen_this_cycle.add(sample.gpu_index)
            yield sample.with_timestamp(start_time + cycle * source.nominal_interval_s)


def _stream(source: TelemetrySource, clock: Callable[[], float]) -> Iterator[PowerSample]:
    try:
        process = subprocess.Popen(
            shlex.split(source.origin),
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
    except (OSError, ValueError) as exc:
        raise SourceUnavailable(f"cannot spawn sampler: {exc}") from exc
    emitted = 0
    try:
        assert process.stdout is not None
        for line_no, line in enumerate(process.stdout, 1):
            try:
                sample = parse_dmon_line(line, source.columns)
            except (MalformedLine, NegativePower) as exc:
                raise _classify_parse_error(exc, line_no) from exc
            if sample is None:
                continue
            emitted += 1
            yield sample.with_timestamp(clock())
    finally:
        # Runs on normal EOF and when the consumer stops early; must
        # not raise, only reap the child.
        process.stdout.close()
        if process.poll() is None:
            process.terminate()
            try:
                process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                process.kill()
                process.wait()
    if emitted == 0:
        raise SourceUnavailable(
            f"sampler exited with status {process.returncode} "
            "before producing any samples",
            exit_status=process.returncode,
        )


def read_source(
    source: TelemetrySource,
    clock: Callable[[], float] = time.time,
    start_time: float = 0.0,
) -> Iterator[PowerSample]:
    """Stream samples from a source, in arrival order.

    File replay synthesizes timestamps at nominal_interval_s spacing
    from start_time; live streams stamp each sample with clock() at
    read time. Single producer: drain from exactly one consumer.
    """
    if source.kind == FILE_REPLAY:
        return _replay(source, start_time)
    return _stream(source, clock)
