"""Physical production vector and mass-based impact intensities.

Given a characteristic output price p_i ($/kg) for every goods sector, the
monetary total-output vector is converted into a hybrid physical vector:
P_i = (L*d)_i / p_i in kg for goods, while service sectors keep their
dollar value (p = 1, the division is a no-op). Impact intensities are then
re-based from per-dollar to per-kilogram for goods: r*_i = p_i * r_i.

Support sectors (no physical flows) get P_i = 0 and are excluded from r*
entirely, since a kg-based intensity is meaningless for them; they are
carried through with an informational note instead.

Every entry of the hybrid vectors carries an explicit unit tag. Arithmetic
that would mix a kg-tagged and a USD-tagged entry raises UnitMismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import MissingPrice, NonPositivePrice, UnitMismatch
from .model import EconomyModel, ImpactCategory, SectorKind


class PriceMethod(Enum):
    DATA_DRIVEN = "data_driven"
    PRICE_DRIVEN = "price_driven"
    INPUT_DRIVEN = "input_driven"
    UNITY_SERVICE = "unity_service"


class PriceQuality(Enum):
    GOOD = "good"
    PARTIAL = "partial"
    IMPUTED = "imputed"
    MASS_BALANCE = "mass_balance"


class Unit(Enum):
    KG = "kg"
    USD = "usd"
    NONE = "none"


@dataclass(frozen=True)
class PriceEstimate:
    """Characteristic price for one sector.

    ``price`` is $/kg for goods sectors and the dimensionless 1.0 for
    service/support sectors (unity passthrough).
    """

    sector_id: str
    price: float
    method: PriceMethod
    quality: PriceQuality | None = None

    @classmethod
    def unity(cls, sector_id: str) -> "PriceEstimate":
        return cls(sector_id, 1.0, PriceMethod.UNITY_SERVICE)


@dataclass(frozen=True)
class PhysicalVector:
    """Hybrid per-sector production: kg for goods, USD for services.

    Support sectors carry 0 with unit NONE, plus a note in ``notes``.
    """

    sector_ids: tuple[str, ...]
    values: np.ndarray
    units: tuple[Unit, ...]
    notes: Mapping[str, str] = field(default_factory=dict)

    def value(self, sector_id: str) -> float:
        return float(self.values[self.sector_ids.index(sector_id)])

    def unit(self, sector_id: str) -> Unit:
        return self.units[self.sector_ids.index(sector_id)]


@dataclass(frozen=True)
class IntensityVector:
    """Mass-based impact intensities r* for one impact category.

    Goods entries are impact-per-kg, service entries stay impact-per-USD.
    Support sectors are excluded (NaN value, unit NONE) and listed in
    ``excluded``.
    """

    impact: ImpactCategory
    sector_ids: tuple[str, ...]
    values: np.ndarray
    units: tuple[Unit, ...]
    excluded: tuple[str, ...] = ()

    def value(self, sector_id: str) -> float:
        return float(self.values[self.sector_ids.index(sector_id)])

    def unit(self, sector_id: str) -> Unit:
        return self.units[self.sector_ids.index(sector_id)]


def as_price_map(
    prices: Iterable[PriceEstimate] | Mapping[str, PriceEstimate],
) -> dict[str, PriceEstimate]:
    if isinstance(prices, Mapping):
        return dict(prices)
    return {p.sector_id: p for p in prices}


def _checked_price(est: PriceEstimate | None, sector_id: str) -> float:
    if est is None:
        raise MissingPrice(f"no price estimate for sector {sector_id!r}")
    p = float(est.price)
    if p <= 0 or not math.isfinite(p):
        raise NonPositivePrice(
            f"price for sector {sector_id!r} must be > 0, got {est.price!r}"
        )
    return p


def production_from_gross_output(x_i: float, p_i: float) -> float:
    """Mass implied by a monetary production value: x_i / p_i (kg)."""
    if p_i <= 0 or not math.isfinite(p_i):
        raise NonPositivePrice(f"price must be > 0, got {p_i!r}")
    return x_i / p_i


def physical_production(
    model: EconomyModel,
    d,
    prices: Iterable[PriceEstimate] | Mapping[str, PriceEstimate],
    *,
    on_missing: str = "raise",
) -> PhysicalVector:
    """Hybrid physical production vector P for a demand vector d.

    P_i = (L*d)_i / p_i for goods; (L*d)_i unchanged for services; 0 for
    support sectors. ``on_missing='nan'`` records NaN instead of raising
    for goods sectors without a price (used for partial pipeline runs).
    """
    if on_missing not in ("raise", "nan"):
        raise ValueError("on_missing must be 'raise' or 'nan'")
    pmap = as_price_map(prices)
    x_hat = model.solve_demand(d)
    values = np.empty(model.n)
    units: list[Unit] = []
    notes: dict[str, str] = {}
    for i, rec in enumerate(model.sectors):
        if rec.kind is SectorKind.GOODS:
            est = pmap.get(rec.sector_id)
            if est is None and on_missing == "nan":
                values[i] = math.nan
                units.append(Unit.NONE)
                notes[rec.sector_id] = "no price estimate; production undefined"
                continue
            p = _checked_price(est, rec.sector_id)
            values[i] = x_hat[i] / p
            units.append(Unit.KG)
        elif rec.kind is SectorKind.SERVICE:
            values[i] = x_hat[i]
            units.append(Unit.USD)
        else:
            values[i] = 0.0
            units.append(Unit.NONE)
            notes[rec.sector_id] = "support sector: no physical flows"
    return PhysicalVector(
        sector_ids=model.sector_ids,
        values=values,
        units=tuple(units),
        notes=notes,
    )


def mass_intensity(
    model: EconomyModel,
    prices: Iterable[PriceEstimate] | Mapping[str, PriceEstimate],
    category: str,
    *,
    on_missing: str = "raise",
) -> IntensityVector:
    """Mass-based intensity vector r* for one impact category.

    r*_i = p_i * r_i for goods (($/kg)*(impact/$) = impact/kg) and
    r*_i = r_i for services. Support sectors are excluded.
    """
    if on_missing not in ("raise", "nan"):
        raise ValueError("on_missing must be 'raise' or 'nan'")
    r = model.impact_row(category)
    pmap = as_price_map(prices)
    values = np.empty(model.n)
    units: list[Unit] = []
    excluded: list[str] = []
    for i, rec in enumerate(model.sectors):
        if rec.kind is SectorKind.GOODS:
            est = pmap.get(rec.sector_id)
            if est is None and on_missing == "nan":
                values[i] = math.nan
                units.append(Unit.NONE)
                excluded.append(rec.sector_id)
                continue
            p = _checked_price(est, rec.sector_id)
            values[i] = p * r[i]
            units.append(Unit.KG)
        elif rec.kind is SectorKind.SERVICE:
            values[i] = r[i]
            units.append(Unit.USD)
        else:
            values[i] = math.nan
            units.append(Unit.NONE)
            excluded.append(rec.sector_id)
    idx = model._impact_index[category]
    return IntensityVector(
        impact=model.impacts[idx],
        sector_ids=model.sector_ids,
        values=values,
        units=tuple(units),
        excluded=tuple(excluded),
    )


def apply_intensity(
    intensity: IntensityVector, physical: PhysicalVector
) -> np.ndarray:
    """Per-sector impacts r* (*) P with unit-tag checking.

    Multiplying an impact-per-kg intensity with a kg production entry (or
    per-USD with USD) is allowed; any kg/USD mix raises UnitMismatch.
    Entries excluded from the intensity vector come back as NaN.
    """
    if intensity.sector_ids != physical.sector_ids:
        raise UnitMismatch("sector ordering differs between the two vectors")
    out = np.empty(len(physical.sector_ids))
    for i, sid in enumerate(physical.sector_ids):
        iu, pu = intensity.units[i], physical.units[i]
        if iu is Unit.NONE or pu is Unit.NONE:
            out[i] = math.nan
            continue
        if iu is not pu:
            raise UnitMismatch(
                f"sector {sid!r}: intensity per-{iu.value} cannot multiply "
                f"a {pu.value}-tagged production value"
            )
        out[i] = intensity.values[i] * physical.values[i]
    return out
