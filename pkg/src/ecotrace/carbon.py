"""Energy-to-CO2 conversion with uncertainty.

Emissions are PUE * kWh * intensity / 1000, giving kilograms of
CO2-equivalent from grams-per-kWh grid intensity. The grid intensity
is the only quantity carrying uncertainty: its standard deviation
scales through the same linear formula, so relative uncertainty is
preserved (PUE and measured kWh are treated as exact).
Intensities stay in g/kWh internally; the /1000 happens exactly once,
at the conversion boundary.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from ecotrace.errors import (
    EmptyHistory,
    NegativeEnergy,
    NonPositiveValue,
    UnknownRegion,
)

# Global data-center average PUE (Uptime Institute survey, 2020).
DEFAULT_PUE = 1.59


@dataclass(frozen=True)
class CarbonIntensity:
    """Grid carbon intensity for one region, as mean and spread in g/kWh."""

    region: str
    mean_g_per_kwh: float
    std_g_per_kwh: float
    provenance: str = ""

    def __post_init__(self):
        if self.mean_g_per_kwh <= 0:
            raise NonPositiveValue(
                f"{self.region}: intensity mean must be positive, "
                f"got {self.mean_g_per_kwh}"
            )
        if self.std_g_per_kwh < 0:
            raise NonPositiveValue(
                f"{self.region}: intensity std must be non-negative"
            )


@dataclass(frozen=True)
class CarbonContext:
    """Everything needed to turn kWh into kg CO2eq: PUE and grid intensity."""

    intensity: CarbonIntensity
    pue: float = DEFAULT_PUE

    def __post_init__(self):
        # A facility cannot deliver more energy to the racks than it draws.
        if self.pue < 1.0:
            raise NonPositiveValue(f"pue must be >= 1.0, got {self.pue}")


@dataclass(frozen=True)
class EmissionEstimate:
    """CO2-equivalent mass in kg, as mean plus one standard deviation."""

    mean_kg: float
    std_kg: float

    def __post_init__(self):
        if self.mean_kg < 0 or self.std_kg < 0:
            raise NegativeEnergy("emission estimates cannot be negative")

    def __add__(self, other: "EmissionEstimate") -> "EmissionEstimate":
        # Linear (single-sigma) accumulation; a conservative bound when
        # combining across regions.
        return EmissionEstimate(
            self.mean_kg + other.mean_kg, self.std_kg + other.std_kg
        )


ZERO_EMISSION = EmissionEstimate(0.0, 0.0)


def co2_emissions(kwh: float, ctx: CarbonContext) -> EmissionEstimate:
    """Convert energy to CO2eq mass: PUE * kWh * intensity / 1000."""
    if kwh < 0:
        raise NegativeEnergy(f"kwh must be non-negative, got {kwh}")
    return EmissionEstimate(
        mean_kg=ctx.pue * kwh * ctx.intensity.mean_g_per_kwh / 1000.0,
        std_kg=ctx.pue * kwh * ctx.intensity.std_g_per_kwh / 1000.0,
    )


def intensity_stats(history, region: str) -> CarbonIntensity:
    """Summarize an intensity history into mean and population std.

    history is an iterable of (timestamp, g_per_kwh) pairs. Population
    std is used (and recorded in the provenance); on months of hourly
    data the sample/population distinction is negligible.
    """
    pairs = sorted(history)
    if not pairs:
        raise EmptyHistory(f"{region}: empty intensity history")
    values = []
    for ts, value in pairs:
        if value <= 0:
            raise NonPositiveValue(
                f"{region}: non-positive intensity {value} at {ts}"
            )
        values.append(float(value))
    mean = statistics.fmean(values)
    std = statistics.pstdev(values, mu=mean)
    return CarbonIntensity(
        region=region,
        mean_g_per_kwh=mean,
        std_g_per_kwh=std,
        provenance=(
            f"population stats over {len(values)} readings, "
            f"{pairs[0][0]} .. {pairs[-1][0]}"
        ),
    )


_BUILTIN_PROVENANCE = "electricityMap country history, 2020 H1 average"

_BUILTIN_INTENSITIES = {
    "IE": CarbonIntensity("IE", 229.8718, 77.4026, _BUILTIN_PROVENANCE),
    "NL": CarbonIntensity("NL", 399.3685, 31.9251, _BUILTIN_PROVENANCE),
}

_intensity_registry = dict(_BUILTIN_INTENSITIES)


def registry_lookup(region: str) -> CarbonIntensity:
    """Built-in or user-registered intensity for a region code."""
    try:
        return _intensity_registry[region]
    except KeyError:
        raise UnknownRegion(region, _intensity_registry.keys()) from None


def register_intensity(intensity: CarbonIntensity) -> None:
    """Add or replace a region entry (copy-on-update, safe for readers)."""
    global _intensity_registry
    updated = dict(_intensity_registry)
    updated[intensity.region] = intensity
    _intensity_registry = updated


def known_regions() -> tuple[str, ...]:
    return tuple(sorted(_intensity_registry))


def context_for(region: str, pue: float = DEFAULT_PUE) -> CarbonContext:
    return CarbonContext(intensity=registry_lookup(region), pue=pue)


def apply_intensity_overrides(config: dict) -> None:
    """Apply [intensity.<REGION>] sections from a parsed config mapping."""
    for region, entry in config.get("intensity", {}).items():
        register_intensity(
            CarbonIntensity(
                region=region,
                mean_g_per_kwh=float(entry["mean"]),
                std_g_per_kwh=float(entry.get("std", 0.0)),
                provenance=entry.get("provenance", "config override"),
            )
        )


def read_intensity_history_csv(path, region: str) -> list[tuple[str, float]]:
    """Read (timestamp, g_per_kwh) pairs for one region from a history CSV.

    Expected columns: timestamp_iso8601,region,carbon_intensity_g_per_kwh
    (header row mandatory). Rows for other regions are skipped.
    """
    import csv

    expected = ["timestamp_iso8601", "region", "carbon_intensity_g_per_kwh"]
    pairs = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyHistory(f"{path}: empty history file") from None
        if header != expected:
            raise EmptyHistory(
                f"{path}: bad header {header!r}; expected {','.join(expected)}"
            )
        for row_no, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 3:
                raise NonPositiveValue(
                    f"{path}:{row_no}: expected 3 fields, got {len(row)}"
                )
            if row[1] != region:
                continue
            try:
                pairs.append((row[0], float(row[2])))
            except ValueError:
                raise NonPositiveValue(
                    f"{path}:{row_no}: non-numeric intensity {row[2]!r}"
                ) from None
    if not pairs:
        raise EmptyHistory(f"{path}: no rows for region {region!r}")
    return pairs
