"""Trade-based price imputation with duty-rate tiering.

Per-sector import aggregates (CIF value, net weight, calculated duty) are
turned into characteristic producer prices in $/kg:

  1. duty rate  = duty / CIF
  2. rates are smoothed by tiering: the non-zero rate range [min, max] is
     split into three equal-width intervals and every sector is assigned
     the mean rate of its tier; zero-rate sectors keep rate 0
  3. basic price = CIF * (1 + assigned rate) / net weight
  4. producer price = basic price / tau (basic-to-producer ratio)

Interval convention: the two lower intervals are half-open, the top one is
closed at max, so every non-zero rate lands in exactly one tier. A missing
tau ratio degrades gracefully to 1.0 with a per-sector warning. Sectors
failing any step land in a rejects list, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    DegenerateRange,
    EmptyRates,
    NonPositiveTau,
    ZeroCif,
    ZeroWeight,
)
from .physical import PriceEstimate, PriceMethod, PriceQuality


class DutyTier(Enum):
    ZERO = "zero"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class IndustryTradeAggregate:
    """Import totals for one industry after crosswalk aggregation.

    Totals are sums over the contributing trade rows (never averages) and
    are kept as exact rationals so conservation checks can be exact.
    """

    sector_id: str
    cif_total: Fraction
    net_weight_total: Fraction
    duty_total: Fraction


@dataclass(frozen=True)
class DutyTierAssignment:
    sector_id: str
    raw_rate: float
    tier: DutyTier
    assigned_rate: float


@dataclass(frozen=True)
class TauRatio:
    """Basic-to-producer price ratio for one sector; 1.0 when defaulted."""

    sector_id: str
    ratio: float
    defaulted: bool = False


@dataclass(frozen=True)
class TierBounds:
    """Three equal-width intervals over the non-zero duty-rate range."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / 3.0

    def intervals(self) -> tuple[tuple[float, float], ...]:
        w = self.width
        return ((self.lo, self.lo + w), (self.lo + w, self.lo + 2 * w),
                (self.lo + 2 * w, self.hi))

    def classify(self, rate: float) -> DutyTier:
        if rate < self.lo or rate > self.hi:
            raise ValueError(f"rate {rate!r} outside tier range [{self.lo}, {self.hi}]")
        w = self.width
        # top interval is closed at max; guard float drift of lo + 2w
        if rate == self.hi or rate >= self.lo + 2 * w:
            return DutyTier.HIGH
        if rate >= self.lo + w:
            return DutyTier.MEDIUM
        return DutyTier.LOW


@dataclass(frozen=True)
class PriceReject:
    sector_id: str
    step: str
    reason: str


@dataclass
class PriceImputationResult:
    estimates: list[PriceEstimate]
    tiers: list[DutyTierAssignment]
    rejects: list[PriceReject]
    warnings: list[str]
    #: which sector set the tiers were computed over (recorded because the
    #: tiering scope is otherwise invisible in the outputs)
    scope_note: str = ""
    #: sectors whose tau ratio was missing and defaulted to 1.0
    defaulted_tau: tuple[str, ...] = ()


def duty_rate(duty_total, cif_total) -> float:
    """Dimensionless duty rate duty/CIF."""
    cif = float(cif_total)
    if cif <= 0:
        raise ZeroCif("CIF total is zero; cannot form a duty rate")
    return float(duty_total) / cif


def tier_bounds(nonzero_rates: Iterable[float]) -> TierBounds:
    """Equal-width tier bounds over the non-zero duty rates.

    Raises:
        EmptyRates: no non-zero rates at all.
        DegenerateRange: all non-zero rates are equal (zero width).
    """
    rates = sorted(set(float(r) for r in nonzero_rates))
    if not rates:
        raise EmptyRates("no non-zero duty rates; all sectors are zero-tier")
    if len(rates) == 1:
        raise DegenerateRange(
            f"all non-zero duty rates equal {rates[0]}; intervals have zero width"
        )
    return TierBounds(lo=rates[0], hi=rates[-1])


def assign_tiers(
    rates: Mapping[str, float], bounds: TierBounds
) -> list[DutyTierAssignment]:
    """Assign each sector the mean rate of its duty tier.

    Zero-rate sectors get tier ZERO with assigned rate 0. Tiers may be
    empty; output is sorted by sector id.
    """
    tier_of: dict[str, DutyTier] = {}
    members: dict[DutyTier, list[float]] = {t: [] for t in DutyTier}
    for sid in sorted(rates):
        rate = float(rates[sid])
        tier = DutyTier.ZERO if rate == 0.0 else bounds.classify(rate)
        tier_of[sid] = tier
        members[tier].append(rate)
    means = {
        tier: (sum(vals) / len(vals) if vals else 0.0)
        for tier, vals in members.items()
    }
    means[DutyTier.ZERO] = 0.0
    return [
        DutyTierAssignment(
            sector_id=sid,
            raw_rate=float(rates[sid]),
            tier=tier_of[sid],
            assigned_rate=means[tier_of[sid]],
        )
        for sid in sorted(rates)
    ]


def compute_tier_assignments(
    rates: Mapping[str, float],
) -> tuple[list[DutyTierAssignment], list[str]]:
    """Tiering with the degenerate and empty cases handled.

    Empty non-zero set: every sector is zero-tier. Degenerate range (all
    non-zero rates equal): one collapsed tier whose mean is that rate;
    with zero width the closed-at-max convention puts them in HIGH.
    """
    warnings: list[str] = []
    nonzero = {s: r for s, r in rates.items() if r != 0.0}
    if not nonzero:
        assignments = [
            DutyTierAssignment(sid, 0.0, DutyTier.ZERO, 0.0) for sid in sorted(rates)
        ]
        if rates:
            warnings.append("no non-zero duty rates; all sectors assigned zero duty")
        return assignments, warnings
    try:
        bounds = tier_bounds(nonzero.values())
    except DegenerateRange:
        rate = float(next(iter(nonzero.values())))
        warnings.append(
            f"degenerate duty-rate range (all non-zero rates equal {rate}); "
            "collapsed to a single tier"
        )
        return [
            DutyTierAssignment(
                sid,
                float(rates[sid]),
                DutyTier.ZERO if rates[sid] == 0.0 else DutyTier.HIGH,
                0.0 if rates[sid] == 0.0 else rate,
            )
            for sid in sorted(rates)
        ], warnings
    return assign_tiers(rates, bounds), warnings


def basic_price(agg: IndustryTradeAggregate, assigned_rate: float) -> float:
    """Basic price (CIF + CIF*rate) / net weight in $/kg."""
    weight = float(agg.net_weight_total)
    if weight <= 0:
        raise ZeroWeight(
            f"sector {agg.sector_id!r} has zero net weight; cannot price from trade"
        )
    cif = float(agg.cif_total)
    return (cif + cif * assigned_rate) / weight


def producer_price(basic: float, tau: TauRatio) -> float:
    """Producer price = basic price / tau ratio."""
    if tau.ratio <= 0:
        raise NonPositiveTau(
            f"tau ratio for sector {tau.sector_id!r} must be > 0, got {tau.ratio!r}"
        )
    return basic / tau.ratio


def impute_prices(
    aggregates: Iterable[IndustryTradeAggregate],
    tau_ratios: Mapping[str, float] | Iterable[TauRatio] | None = None,
) -> PriceImputationResult:
    """Full trade-based imputation: duty rate, tiering, Eq.-style pricing.

    ``aggregates`` already carry per-sector duty totals (the duty file is
    joined during crosswalk aggregation). Sectors that fail a step are
    collected in ``rejects`` with the failing step and reason. Output
    ordering is by sector id, independent of input order.
    """
    aggs = sorted(aggregates, key=lambda a: a.sector_id)
    if tau_ratios is None:
        taus: dict[str, float] = {}
    elif isinstance(tau_ratios, Mapping):
        taus = dict(tau_ratios)
    else:
        taus = {t.sector_id: t.ratio for t in tau_ratios}

    warnings: list[str] = []
    rejects: list[PriceReject] = []
    rates: dict[str, float] = {}
    by_sector: dict[str, IndustryTradeAggregate] = {}
    for agg in aggs:
        by_sector[agg.sector_id] = agg
        try:
            rates[agg.sector_id] = duty_rate(agg.duty_total, agg.cif_total)
        except ZeroCif as exc:
            rejects.append(PriceReject(agg.sector_id, "duty_rate", str(exc)))

    assignments, tier_warnings = compute_tier_assignments(rates)
    warnings.extend(tier_warnings)
    assigned = {a.sector_id: a.assigned_rate for a in assignments}

    estimates: list[PriceEstimate] = []
    defaulted_tau: list[str] = []
    for sid in sorted(rates):
        agg = by_sector[sid]
        try:
            basic = basic_price(agg, assigned[sid])
        except ZeroWeight as exc:
            rejects.append(PriceReject(sid, "basic_price", str(exc)))
            continue
        if sid in taus:
            tau = TauRatio(sid, float(taus[sid]))
        else:
            tau = TauRatio(sid, 1.0, defaulted=True)
            defaulted_tau.append(sid)
            warnings.append(
                f"no tau ratio for sector {sid!r}; defaulting to 1.0 "
                "(producer price equals basic price)"
            )
        try:
            price = producer_price(basic, tau)
        except NonPositiveTau as exc:
            rejects.append(PriceReject(sid, "producer_price", str(exc)))
            continue
        estimates.append(
            PriceEstimate(sid, price, PriceMethod.PRICE_DRIVEN, PriceQuality.IMPUTED)
        )

    return PriceImputationResult(
        estimates=estimates,
        tiers=assignments,
        rejects=sorted(rejects, key=lambda r: r.sector_id),
        warnings=warnings,
        scope_note=f"duty tiers computed over {len(rates)} sector(s) with trade data",
        defaulted_tau=tuple(defaulted_tau),
    )
