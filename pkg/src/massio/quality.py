"""Coverage classification and cross-method comparison reporting.

Percent differences between two mass estimates use the symmetric
mean-based definition |a - b| / ((a + b) / 2) * 100, which is symmetric,
scale-invariant and bounded by (0, 200). Every report that prints a
percent difference states this formula in its header.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping

from .errors import NonPositiveMass, SchemaViolation

PCT_DIFF_FORMULA = (
    "symmetric percent difference: |a-b| / ((a+b)/2) * 100, range (0, 200)"
)


class Availability(Enum):
    """Raw data-availability flag for one sector."""

    GOOD = "good"
    PARTIAL = "partial"
    NONE = "none"
    NO_FLOW = "no_flow"


class CoverageClass(Enum):
    GOOD_DATA = "good_data"
    PARTIAL_DATA = "partial_data"
    NO_DATA = "no_data"
    NO_PHYSICAL_FLOW = "no_physical_flow"


_CLASS_OF = {
    Availability.GOOD: CoverageClass.GOOD_DATA,
    Availability.PARTIAL: CoverageClass.PARTIAL_DATA,
    Availability.NONE: CoverageClass.NO_DATA,
    Availability.NO_FLOW: CoverageClass.NO_PHYSICAL_FLOW,
}


@dataclass(frozen=True)
class SectorCoverage:
    sector_id: str
    coverage: CoverageClass


@dataclass(frozen=True)
class CoverageSummary:
    good: int
    partial: int
    no_flow: int
    no_data: int
    total: int
    #: whole-percent share of no-data sectors, truncated (floor)
    no_data_pct: int


def classify_coverage(
    inventory: Iterable[tuple[str, Availability | str]],
) -> tuple[list[SectorCoverage], CoverageSummary]:
    """Four-way coverage classification plus summary counts.

    ``inventory`` holds (sector_id, availability) pairs for every goods and
    support sector. Output is sorted by sector id.
    """
    classes: list[SectorCoverage] = []
    for sector_id, avail in inventory:
        if isinstance(avail, str):
            avail = Availability(avail)
        classes.append(SectorCoverage(sector_id, _CLASS_OF[avail]))
    classes.sort(key=lambda c: c.sector_id)
    counts = {cls: 0 for cls in CoverageClass}
    for c in classes:
        counts[c.coverage] += 1
    total = len(classes)
    no_data = counts[CoverageClass.NO_DATA]
    summary = CoverageSummary(
        good=counts[CoverageClass.GOOD_DATA],
        partial=counts[CoverageClass.PARTIAL_DATA],
        no_flow=counts[CoverageClass.NO_PHYSICAL_FLOW],
        no_data=no_data,
        total=total,
        no_data_pct=(100 * no_data) // total if total else 0,
    )
    return classes, summary


def bundled_coverage_inventory() -> list[tuple[str, Availability]]:
    """The packaged detail-level coverage inventory (transcribed counts).

    This file transcribes published per-class industry counts; it is not
    re-derived from raw data sources. See data/fig3_inventory.csv.
    """
    text = (
        resources.files("massio").joinpath("data/fig3_inventory.csv").read_text("utf-8")
    )
    rows = list(csv.reader(text.splitlines()))
    if not rows or rows[0] != ["sector_id", "availability"]:
        raise SchemaViolation(
            "bundled inventory must have header sector_id,availability",
            path="massio/data/fig3_inventory.csv",
        )
    return [(sid, Availability(av)) for sid, av in rows[1:]]


def percent_difference(a: float, b: float) -> float:
    """Symmetric percent difference between two masses (see PCT_DIFF_FORMULA)."""
    if a <= 0 or b <= 0 or not (math.isfinite(a) and math.isfinite(b)):
        raise NonPositiveMass(
            f"percent difference needs strictly positive masses, got {a!r}, {b!r}"
        )
    return abs(a - b) / ((a + b) / 2.0) * 100.0


@dataclass(frozen=True)
class MethodComparison:
    sector_id: str
    mass_data_driven: float
    mass_price_driven: float
    pct_difference: float
    #: True when floor(log10) of the two masses differ
    magnitude_mismatch: bool


def compare_methods(
    data_driven: Mapping[str, float],
    price_driven: Mapping[str, float],
) -> tuple[list[MethodComparison], list[tuple[str, str]]]:
    """Per-sector comparison where both methods produced a mass.

    Sectors lacking either estimate (or with a non-positive one) come back
    in the not-comparable list with a reason; nothing raises.
    """
    comparisons: list[MethodComparison] = []
    not_comparable: list[tuple[str, str]] = []
    for sid in sorted(set(data_driven) | set(price_driven)):
        a = data_driven.get(sid)
        b = price_driven.get(sid)
        if a is None:
            not_comparable.append((sid, "no data-driven estimate"))
            continue
        if b is None:
            not_comparable.append((sid, "no price-driven estimate"))
            continue
        if a <= 0 or b <= 0:
            not_comparable.append((sid, "non-positive mass estimate"))
            continue
        comparisons.append(
            MethodComparison(
                sector_id=sid,
                mass_data_driven=float(a),
                mass_price_driven=float(b),
                pct_difference=percent_difference(a, b),
                magnitude_mismatch=(
                    math.floor(math.log10(a)) != math.floor(math.log10(b))
                ),
            )
        )
    return comparisons, not_comparable
