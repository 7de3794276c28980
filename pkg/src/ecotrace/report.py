"""Rendering: run tables, chart-data exports, and the carbon statement.

All renders are pure functions of their inputs and byte-stable across
runs. Numbers are kept at full precision throughout aggregation and
rounded exactly once, at formatting time, half away from zero with a
locale-independent decimal point.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Optional, Sequence

from ecotrace.analytics import ComparisonRow, EquivalenceRow, RunRecord
from ecotrace.carbon import (
    DEFAULT_PUE,
    ZERO_EMISSION,
    CarbonContext,
    EmissionEstimate,
    co2_emissions,
    context_for,
)
from ecotrace.errors import (
    EmptyRecordSet,
    IoFailure,
    TotalsMismatch,
    UnsupportedFormat,
)

MARKDOWN = "md"
CSV = "csv"
JSON = "json"
TEXT = "text"
FORMATS = (MARKDOWN, CSV, JSON, TEXT)

TABLE_COLUMNS = ["id", "elapsed_h", "avg_power_w", "kwh", "co2_kg"]


def fmt(value: float, places: int = 2) -> str:
    """Fixed-point formatting, ties away from zero, never locale-aware."""
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))


def _contexts_for(
    records: Sequence[RunRecord],
    contexts: Optional[Mapping[str, CarbonContext]],
    pue: float,
) -> dict[str, CarbonContext]:
    resolved = {}
    for record in records:
        if contexts is not None and record.region in contexts:
            resolved[record.region] = contexts[record.region]
        elif record.region not in resolved:
            resolved[record.region] = context_for(record.region, pue)
    return resolved


@dataclass(frozen=True)
class ReportBundle:
    """A rendered-table payload plus its recomputed totals."""

    title: str
    rows: list[dict]
    total_kwh: float
    total_emission: EmissionEstimate

    def check_totals(self) -> None:
        kwh = sum(r["kwh"] for r in self.rows)
        mean = sum(r["co2_mean_kg"] for r in self.rows)
        std = sum(r["co2_std_kg"] for r in self.rows)
        if (
            kwh != self.total_kwh
            or mean != self.total_emission.mean_kg
            or std != self.total_emission.std_kg
        ):
            raise TotalsMismatch(
                f"{self.title!r}: stored totals disagree with column sums"
            )


def build_report(
    records: Sequence[RunRecord],
    title: str = "runs",
    contexts: Optional[Mapping[str, CarbonContext]] = None,
    pue: float = DEFAULT_PUE,
) -> ReportBundle:
    """Per-record emissions table with exact (unrounded) totals."""
    resolved = _contexts_for(records, contexts, pue)
    rows = []
    total_kwh = 0.0
    total = ZERO_EMISSION
    for record in records:
        emission = co2_emissions(record.kwh, resolved[record.region])
        rows.append(
            {
                "id": record.id,
                "elapsed_h": record.elapsed_h,
                "avg_power_w": record.avg_power_w,
                "kwh": record.kwh,
                "co2_mean_kg": emission.mean_kg,
                "co2_std_kg": emission.std_kg,
            }
        )
        total_kwh += record.kwh
        total = total + emission
    return ReportBundle(
        title=title, rows=rows, total_kwh=total_kwh, total_emission=total
    )


def _row_cells(row: dict) -> list[str]:
    return [
        row["id"],
        fmt(row["elapsed_h"]),
        fmt(row["avg_power_w"]),
        fmt(row["kwh"]),
        f"{fmt(row['co2_mean_kg'])} ± {fmt(row['co2_std_kg'])}",
    ]


def _total_cells(bundle: ReportBundle) -> list[str]:
    return [
        "TOTAL",
        "",
        "",
        fmt(bundle.total_kwh),
        f"{fmt(bundle.total_emission.mean_kg)} ± {fmt(bundle.total_emission.std_kg)}",
    ]


def render_bundle(bundle: ReportBundle, format: str = MARKDOWN) -> str:
    """Render a bundle; totals are re-verified against the rows first."""
    bundle.check_totals()
    table = [_row_cells(r) for r in bundle.rows] + [_total_cells(bundle)]
    if format == MARKDOWN:
        lines = [
            "| " + " | ".join(TABLE_COLUMNS) + " |",
            "|" + "|".join(" --- " for _ in TABLE_COLUMNS) + "|",
        ]
        lines += ["| " + " | ".join(cells) + " |" for cells in table]
        return "\n".join(lines) + "\n"
    if format == CSV:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(TABLE_COLUMNS)
        writer.writerows(table)
        return buffer.getvalue()
    if format == JSON:
        payload = {
            "title": bundle.title,
            "columns": TABLE_COLUMNS,
            "rows": [dict(zip(TABLE_COLUMNS, cells)) for cells in table[:-1]],
            "totals": {
                "kwh": fmt(bundle.total_kwh),
                "co2_kg": table[-1][-1],
            },
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if format == TEXT:
        widths = [
            max(len(TABLE_COLUMNS[i]), *(len(cells[i]) for cells in table))
            for i in range(len(TABLE_COLUMNS))
        ]
        def line(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        lines = [line(TABLE_COLUMNS), line(["-" * w for w in widths])]
        lines += [line(cells) for cells in table]
        return "\n".join(lines) + "\n"
    raise UnsupportedFormat(
        f"unknown format {format!r}; supported: {', '.join(FORMATS)}"
    )


def render_table(
    records: Sequence[RunRecord],
    format: str = MARKDOWN,
    contexts: Optional[Mapping[str, CarbonContext]] = None,
    pue: float = DEFAULT_PUE,
    title: str = "runs",
) -> str:
    return render_bundle(build_report(records, title, contexts, pue), format)


def carbon_statement(
    records: Sequence[RunRecord],
    contexts: Optional[Mapping[str, CarbonContext]] = None,
    pue: float = DEFAULT_PUE,
) -> str:
    """One-sentence disclosure of total kg CO2eq and kWh for a body of work.

    Emissions are recomputed per record from its kWh and regional
    context. Standard deviations accumulate linearly within a region
    (a single-sigma model: one grid's hourly intensities are strongly
    correlated) and are combined across regions by linear sum as a
    conservative bound; the footnote says so.
    """
    if not records:
        raise EmptyRecordSet("cannot write a statement over zero records")
    resolved = _contexts_for(records, contexts, pue)
    per_region_kwh: dict[str, float] = {}
    total_kwh = 0.0
    total = ZERO_EMISSION
    for record in records:
        emission = co2_emissions(record.kwh, resolved[record.region])
        total_kwh += record.kwh
        total = total + emission
        per_region_kwh[record.region] = (
            per_region_kwh.get(record.region, 0.0) + record.kwh
        )
    statement = (
        f"This work contributed {fmt(total.mean_kg)} ± {fmt(total.std_kg)} kg "
        f"of CO2eq to the atmosphere and used {fmt(total_kwh)} kWh of "
        f"electricity."
    )
    breakdown = ", ".join(
        f"{region} {fmt(kwh)} kWh ({len([r for r in records if r.region == region])} runs)"
        for region, kwh in sorted(per_region_kwh.items())
    )
    footnote = (
        f"Basis: {breakdown}; uncertainty is one standard deviation of grid "
        f"carbon intensity, summed linearly within and across regions."
    )
    return statement + "\n" + footnote + "\n"


def chart_rows(
    rows: Iterable[object],
) -> list[tuple[str, float, str]]:
    """Normalize comparison or equivalence rows to (name, value, kind)."""
    normalized = []
    for row in rows:
        if isinstance(row, ComparisonRow):
            normalized.append((row.name, row.power_w, row.kind))
        elif isinstance(row, EquivalenceRow):
            normalized.append((row.name, row.annual_kg, "device"))
        else:
            name, value, kind = row  # already a triple
            normalized.append((str(name), float(value), str(kind)))
    return normalized


def export_chart_data(rows: Iterable[object], path) -> int:
    """Write chart-ready rows as CSV (name,value,kind), order preserved."""
    triples = chart_rows(rows)
    if not triples:
        raise EmptyRecordSet("no rows to export")
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["name", "value", "kind"])
            for name, value, kind in triples:
                writer.writerow([name, repr(value), kind])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return len(triples)


def read_chart_data(path) -> list[tuple[str, float, str]]:
    """Inverse of export_chart_data, for verification and reuse."""
    triples = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["name", "value", "kind"]:
            raise IoFailure(f"{path}: bad chart-data header {header!r}")
        for row in reader:
            if row:
                triples.append((row[0], float(row[1]), row[2]))
    return triples
