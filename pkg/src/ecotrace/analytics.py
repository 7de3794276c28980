"""Derived analyses over run records.

Covers the downstream questions the measurements exist to answer:
does a record's energy agree with its average draw and duration; after
how long does a costlier-to-train but cheaper-to-run system win on
cumulative energy; what does a draw extrapolate to over a year of use;
and how does that compare to household appliances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from ecotrace.carbon import CarbonContext, EmissionEstimate, co2_emissions
from ecotrace.errors import (
    EmptyDeviceList,
    InvalidRecord,
    NoCrossover,
    NonPositiveValue,
    UtilizationOutOfRange,
    ZeroEnergy,
)
from ecotrace.telemetry import lookup_gpu

HOURS_PER_YEAR = 8760  # leap years ignored; effect < 0.3%

PHASE_TRAIN = "train"
PHASE_TRANSLATE = "translate"
PRECISION_FP32 = "fp32"
PRECISION_INT16 = "int16"
PRECISION_INT8 = "int8"

_PHASES = (PHASE_TRAIN, PHASE_TRANSLATE)
_PRECISIONS = (PRECISION_FP32, PRECISION_INT16, PRECISION_INT8)


@dataclass(frozen=True)
class RunRecord:
    """One measured experiment: a training or translation run."""

    id: str
    label: str
    architecture: str
    lang_pair: str
    phase: str
    precision: str
    gpu_model: str
    n_gpus: int
    elapsed_h: float
    kwh: float
    avg_power_w: float
    region: str
    steps: Optional[int] = None
    audit: Optional[str] = None

    def validate(self) -> "RunRecord":
        if not self.id:
            raise InvalidRecord("record id must be non-empty")
        if self.phase not in _PHASES:
            raise InvalidRecord(f"{self.id}: unknown phase {self.phase!r}")
        if self.precision not in _PRECISIONS:
            raise InvalidRecord(f"{self.id}: unknown precision {self.precision!r}")
        if self.n_gpus < 1:
            raise InvalidRecord(f"{self.id}: n_gpus must be >= 1")
        if self.elapsed_h <= 0:
            raise InvalidRecord(f"{self.id}: elapsed_h must be positive")
        if self.kwh < 0:
            raise InvalidRecord(f"{self.id}: kwh must be non-negative")
        if self.avg_power_w <= 0:
            raise InvalidRecord(f"{self.id}: avg_power_w must be positive")
        spec = lookup_gpu(self.gpu_model)
        if spec is not None:
            board_limit = self.n_gpus * spec.tdp_w * self.elapsed_h / 1000.0
            if self.kwh > board_limit:
                raise InvalidRecord(
                    f"{self.id}: {self.kwh} kWh exceeds the board limit "
                    f"{board_limit:.2f} kWh ({self.n_gpus} x {spec.tdp_w} W TDP "
                    f"x {self.elapsed_h} h)"
                )
        return self

    @property
    def workstation_power_w(self) -> float:
        """Whole-workstation draw implied by energy over elapsed time.

        Unlike avg_power_w (a per-reading mean) this captures all GPUs,
        which is what annualization needs.
        """
        return self.kwh / self.elapsed_h * 1000.0


@dataclass(frozen=True)
class ConsistencyResult:
    relative_error: float
    ok: bool
    implied_kwh: float
    threshold: float


def consistency_check(record: RunRecord, threshold: float = 0.05) -> ConsistencyResult:
    """Audit kwh against avg_power_w * n_gpus * elapsed_h / 1000.

    The per-reading average and the integrated energy are measured
    independently, so a large relative gap flags a suspect record.
    """
    if record.kwh == 0:
        raise ZeroEnergy(f"{record.id}: cannot audit a zero-energy record")
    implied = record.avg_power_w * record.n_gpus * record.elapsed_h / 1000.0
    rel = abs(record.kwh - implied) / record.kwh
    return ConsistencyResult(
        relative_error=rel,
        ok=rel <= threshold,
        implied_kwh=implied,
        threshold=threshold,
    )


@dataclass(frozen=True)
class BreakEvenResult:
    hours: float
    assumption_note: str

    @property
    def days(self) -> float:
        return self.hours / 24.0


_BREAK_EVEN_NOTE = (
    "assumes continuous operation at each system's average "
    "inference-time power draw, training included in the balance"
)


def break_even(
    train_a_kwh: float,
    infer_power_a_w: float,
    train_b_kwh: float,
    infer_power_b_w: float,
) -> BreakEvenResult:
    """Hours of continuous inference after which system A has consumed
    less cumulative energy than system B.

    A is the system that costs more to train but less to run; if A is
    not cheaper to run there is no crossover. Equal training energies
    cross over immediately (0 h).
    """
    if infer_power_a_w >= infer_power_b_w:
        raise NoCrossover(
            "system A does not draw less at inference time than system B; "
            "the cheaper-to-train system stays ahead forever"
        )
    if train_a_kwh <= train_b_kwh:
        return BreakEvenResult(hours=0.0, assumption_note=_BREAK_EVEN_NOTE)
    hours = (train_a_kwh - train_b_kwh) * 1000.0 / (infer_power_b_w - infer_power_a_w)
    return BreakEvenResult(hours=hours, assumption_note=_BREAK_EVEN_NOTE)


def break_even_throughput(
    train_a_kwh: float,
    infer_power_a_w: float,
    rate_a_per_h: float,
    train_b_kwh: float,
    infer_power_b_w: float,
    rate_b_per_h: float,
) -> tuple[float, float, float]:
    """Throughput-normalized variant: units of work until A's cumulative
    energy drops below B's, with the hours each system needs for them.

    The plain break_even compares wall-clock operation, which favors
    whichever system happens to be slower; this one charges each system
    its energy per processed unit instead.
    """
    if rate_a_per_h <= 0 or rate_b_per_h <= 0:
        raise NonPositiveValue("work rates must be positive")
    wh_per_unit_a = infer_power_a_w / rate_a_per_h
    wh_per_unit_b = infer_power_b_w / rate_b_per_h
    if wh_per_unit_a >= wh_per_unit_b:
        raise NoCrossover(
            "system A does not use less energy per unit of work than system B"
        )
    if train_a_kwh <= train_b_kwh:
        return 0.0, 0.0, 0.0
    units = (train_a_kwh - train_b_kwh) * 1000.0 / (wh_per_unit_b - wh_per_unit_a)
    return units, units / rate_a_per_h, units / rate_b_per_h


@dataclass(frozen=True)
class DeviceProfile:
    """An appliance described by draw and how much of the year it runs."""

    name: str
    power_w: float
    utilization: float  # fraction of calendar time, in [0, 1]

    def __post_init__(self):
        if self.power_w <= 0:
            raise NonPositiveValue(f"{self.name}: power_w must be positive")
        if not 0 <= self.utilization <= 1:
            raise UtilizationOutOfRange(
                f"{self.name}: utilization {self.utilization} outside [0, 1]"
            )

    @classmethod
    def from_annual_hours(cls, name: str, power_w: float, annual_hours: float):
        if not 0 <= annual_hours <= HOURS_PER_YEAR:
            raise UtilizationOutOfRange(
                f"{name}: annual_hours {annual_hours} outside [0, {HOURS_PER_YEAR}]"
            )
        return cls(name, power_w, annual_hours / HOURS_PER_YEAR)

    @property
    def annual_hours(self) -> float:
        return self.utilization * HOURS_PER_YEAR


@dataclass(frozen=True)
class AnnualEstimate:
    kwh_per_year: float
    emission: EmissionEstimate
    utilization: float


def annualize(
    avg_total_power_w: float, utilization: float, ctx: CarbonContext
) -> AnnualEstimate:
    """Extrapolate a draw to a year: kW * 8760 h * utilization, then CO2."""
    if avg_total_power_w <= 0:
        raise NonPositiveValue("avg_total_power_w must be positive")
    if not 0 <= utilization <= 1:
        raise UtilizationOutOfRange(f"utilization {utilization} outside [0, 1]")
    kwh_per_year = avg_total_power_w / 1000.0 * HOURS_PER_YEAR * utilization
    return AnnualEstimate(
        kwh_per_year=kwh_per_year,
        emission=co2_emissions(kwh_per_year, ctx),
        utilization=utilization,
    )


@dataclass(frozen=True)
class EquivalenceRow:
    name: str
    annual_kg: float
    ratio: float


def appliance_equivalents(
    estimate: AnnualEstimate,
    devices: Iterable[DeviceProfile],
    ctx: CarbonContext,
) -> tuple[list[EquivalenceRow], list[str]]:
    """Compare an annual estimate against appliances, largest ratio first.

    Devices that never run (utilization 0) have no annual emissions to
    divide by; they are skipped and reported in the notes list.
    """
    devices = list(devices)
    if not devices:
        raise EmptyDeviceList("no device profiles to compare against")
    rows = []
    skipped = []
    for device in devices:
        if device.utilization == 0:
            skipped.append(f"{device.name}: utilization 0, ratio undefined")
            continue
        annual = annualize(device.power_w, device.utilization, ctx)
        rows.append(
            EquivalenceRow(
                name=device.name,
                annual_kg=annual.emission.mean_kg,
                ratio=estimate.emission.mean_kg / annual.emission.mean_kg,
            )
        )
    rows.sort(key=lambda r: r.ratio, reverse=True)
    return rows, skipped


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    power_w: float
    kind: str  # "model" or "device"


def power_comparison_rows(
    records: Iterable[RunRecord],
    devices: Iterable[DeviceProfile] = (),
    ceiling_w: float = 1200.0,
) -> list[ComparisonRow]:
    """Merge model and device draws into one chart-ready list.

    Devices above the ceiling are excluded so one outlier (an 8750 W
    shower, say) does not flatten every other bar; models are always
    kept. Sorted by draw, largest first.
    """
    rows = [
        ComparisonRow(name=r.label or r.id, power_w=r.avg_power_w, kind="model")
        for r in records
    ]
    rows += [
        ComparisonRow(name=d.name, power_w=d.power_w, kind="device")
        for d in devices
        if d.power_w <= ceiling_w
    ]
    rows.sort(key=lambda r: (-r.power_w, r.name))
    return rows


def read_devices_csv(path) -> list[DeviceProfile]:
    """Load device profiles from CSV: name,power_w,utilization."""
    import csv

    expected = ["name", "power_w", "utilization"]
    devices = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDeviceList(f"{path}: empty device file") from None
        if header != expected:
            raise EmptyDeviceList(
                f"{path}: bad header {header!r}; expected {','.join(expected)}"
            )
        for row_no, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                devices.append(
                    DeviceProfile(row[0], float(row[1]), float(row[2]))
                )
            except (IndexError, ValueError) as exc:
                raise EmptyDeviceList(f"{path}:{row_no}: {exc}") from None
    if not devices:
        raise EmptyDeviceList(f"{path}: no device rows")
    return devices
