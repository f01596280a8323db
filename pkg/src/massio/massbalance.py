"""Input-driven characteristic prices from an input mass balance.

For sectors with neither direct production data nor usable trade data, the
price is estimated from the mass of the sector's inputs:

    p_i = x_i / ((1 - w_i) * sum_j z_ij)

where z_ij is the mass (kg) of inputs from sector j used by sector i and
w_i is a waste coefficient in [0, 1) for material that enters the sector
but leaves as waste rather than embodied in output.

Input masses are derived from the monetary use flows already in the model:
purchases by i from j are A[j, i] * x_i dollars, divided by j's resolved
price when j produces goods; service inputs carry no mass. Unresolved
sectors that only depend on already-priced sectors are evaluated directly
in dependency order; mutual dependencies (cycles) are solved by fixed-point
iteration, with 0.5 damping switched on only if the iteration oscillates.

Resolution mutates shared iteration state and is sequential; call it from
one thread at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import networkx as nx

from .errors import (
    InvalidWasteCoefficient,
    NonConvergentCycle,
    UnresolvedDependency,
    ZeroInputMass,
)
from .model import EconomyModel, SectorKind

#: Convergence required by the resolution contract (max relative price change).
CYCLE_TOL = 1e-8
#: Iteration cap for one cycle.
CYCLE_MAX_ITER = 500
#: Iteration keeps polishing below this once the required tolerance is met,
#: so the mass-balance closure holds to near machine precision.
POLISH_TOL = 1e-15


@dataclass(frozen=True)
class WasteCoefficient:
    sector_id: str
    w: float
    defaulted: bool = False

    def __post_init__(self):
        if not (0.0 <= self.w < 1.0) or not math.isfinite(self.w):
            raise InvalidWasteCoefficient(
                f"waste coefficient for {self.sector_id!r} must be in [0, 1), "
                f"got {self.w!r}"
            )


@dataclass(frozen=True)
class InputMassRow:
    """Masses of inputs used by one sector, keyed by input sector.

    Service and support inputs appear with 0.0 (they carry no mass);
    goods inputs carry kg.
    """

    sector_id: str
    masses: Mapping[str, float]

    @property
    def total(self) -> float:
        return sum(self.masses.values())


def input_driven_price(x_i: float, z_row: InputMassRow, w: WasteCoefficient) -> float:
    """Characteristic price x_i / ((1 - w) * total input mass) in $/kg."""
    if not (0.0 <= w.w < 1.0):
        raise InvalidWasteCoefficient(
            f"waste coefficient for {z_row.sector_id!r} must be in [0, 1)"
        )
    total = z_row.total
    if total <= 0:
        raise ZeroInputMass(
            f"sector {z_row.sector_id!r} has no input mass; "
            "input-driven price undefined"
        )
    return x_i / ((1.0 - w.w) * total)


def _mass_row(
    model: EconomyModel, prices: Mapping[str, float], sector_id: str
) -> InputMassRow:
    """Input masses for one sector from monetary use flows and input prices."""
    i = model.index_of(sector_id)
    x_i = model.x[i]
    masses: dict[str, float] = {}
    for j, rec in enumerate(model.sectors):
        flow_usd = model.A[j, i] * x_i
        if flow_usd == 0.0:
            continue
        if rec.kind is SectorKind.GOODS:
            p_j = prices.get(rec.sector_id)
            if p_j is None:
                raise UnresolvedDependency(
                    f"input sector {rec.sector_id!r} of {sector_id!r} has no "
                    "resolved price"
                )
            masses[rec.sector_id] = flow_usd / p_j
        else:
            masses[rec.sector_id] = 0.0
    return InputMassRow(sector_id=sector_id, masses=masses)


def derive_input_masses(
    model: EconomyModel,
    resolved_prices: Mapping[str, float],
    sectors: Iterable[str] | None = None,
) -> dict[str, InputMassRow]:
    """Input mass rows for the given sectors (default: unpriced goods sectors).

    Every goods input of a requested sector must already have a resolved
    price, otherwise UnresolvedDependency is raised.
    """
    if sectors is None:
        sectors = [
            s for s in model.sectors_of_kind(SectorKind.GOODS)
            if s not in resolved_prices
        ]
    return {sid: _mass_row(model, resolved_prices, sid) for sid in sectors}


@dataclass
class InputDrivenResolution:
    """Outcome of :func:`resolve_input_driven`."""

    prices: dict[str, float]
    newly_resolved: tuple[str, ...]
    cycles: list[tuple[str, ...]] = field(default_factory=list)
    iterations: dict[tuple[str, ...], int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    defaulted_waste: tuple[str, ...] = ()


def _waste_map(
    model: EconomyModel,
    waste: Mapping[str, float] | Iterable[WasteCoefficient] | None,
    targets: Iterable[str],
    warnings: list[str],
) -> dict[str, WasteCoefficient]:
    if waste is None:
        given: dict[str, WasteCoefficient] = {}
    elif isinstance(waste, Mapping):
        given = {s: WasteCoefficient(s, float(w)) for s, w in waste.items()}
    else:
        given = {w.sector_id: w for w in waste}
    out: dict[str, WasteCoefficient] = {}
    for sid in targets:
        if sid in given:
            out[sid] = given[sid]
        else:
            out[sid] = WasteCoefficient(sid, 0.0, defaulted=True)
            warnings.append(f"waste coefficient defaulted to 0.0 for {sid!r}")
    return out


def _solve_cycle(
    model: EconomyModel,
    prices: dict[str, float],
    members: tuple[str, ...],
    waste: Mapping[str, WasteCoefficient],
    tol: float,
    max_iter: int,
    warnings: list[str],
) -> int:
    """Fixed-point iteration over one dependency cycle; returns iterations.

    Members start at the mean resolved goods price. Proposals keep being
    applied until the relative step shrinks to POLISH_TOL (cheap, and makes
    the closure p*(1-w)*sum(z) == x tight); failure is only declared if the
    step is still above ``tol`` when the iteration budget runs out.
    """
    resolved_goods = [
        prices[s] for s in model.sectors_of_kind(SectorKind.GOODS) if s in prices
    ]
    if resolved_goods:
        start = sum(resolved_goods) / len(resolved_goods)
    else:
        start = 1.0
        warnings.append(
            "no resolved goods prices to seed cycle "
            f"{members}; starting fixed point at 1.0 $/kg"
        )
    current = {sid: start for sid in members}
    damping = 1.0
    prev_change = math.inf
    change = math.inf
    its = 0
    for its in range(1, max_iter + 1):
        trial = dict(prices)
        trial.update(current)
        proposed = {}
        for sid in members:
            row = _mass_row(model, trial, sid)
            proposed[sid] = input_driven_price(
                model.x[model.index_of(sid)], row, waste[sid]
            )
        change = max(
            abs(proposed[s] - current[s]) / current[s] for s in members
        )
        if change > prev_change and damping == 1.0:
            damping = 0.5  # oscillation detected; damp subsequent steps
            warnings.append(f"cycle {members}: oscillation detected, damping 0.5")
        if damping == 1.0:
            current = proposed
        else:
            current = {
                s: current[s] + damping * (proposed[s] - current[s])
                for s in members
            }
        prev_change = change
        if change < POLISH_TOL:
            break
    if change > tol:
        raise NonConvergentCycle(
            f"cycle {members} did not converge below {tol} in {max_iter} "
            f"iterations (last relative change {change:.3e})",
            cycle=members,
        )
    prices.update(current)
    return its


def resolve_input_driven(
    model: EconomyModel,
    resolved_prices: Mapping[str, float],
    waste: Mapping[str, float] | Iterable[WasteCoefficient] | None = None,
    *,
    sectors: Iterable[str] | None = None,
    tol: float = CYCLE_TOL,
    max_iter: int = CYCLE_MAX_ITER,
) -> InputDrivenResolution:
    """Complete the price map for all goods sectors via the mass balance.

    Unresolved goods sectors (or the explicit ``sectors`` subset) are
    ordered by their goods-input dependencies among themselves (strongly
    connected components of the dependency graph, in topological order).
    Acyclic sectors are a single direct evaluation; cycles are solved by
    fixed-point iteration.

    Raises:
        NonConvergentCycle: a cycle failed to converge; the exception lists
            its members.
        ZeroInputMass: an unresolved sector has no mass-bearing inputs.
    """
    prices = {s: float(p) for s, p in resolved_prices.items()}
    goods = model.sectors_of_kind(SectorKind.GOODS)
    if sectors is None:
        unresolved = [s for s in goods if s not in prices]
    else:
        goods_set = set(goods)
        unresolved = []
        for s in sectors:
            if s not in goods_set:
                raise ValueError(f"sector {s!r} is not a goods sector")
            if s not in prices:
                unresolved.append(s)
    warnings: list[str] = []
    result = InputDrivenResolution(
        prices=prices, newly_resolved=tuple(unresolved), warnings=warnings
    )
    if not unresolved:
        return result
    waste_map = _waste_map(model, waste, unresolved, warnings)
    result.defaulted_waste = tuple(
        sid for sid in unresolved if waste_map[sid].defaulted
    )

    graph = nx.DiGraph()
    graph.add_nodes_from(unresolved)
    pending = set(unresolved)
    for sid in unresolved:
        i = model.index_of(sid)
        for j, rec in enumerate(model.sectors):
            if (
                rec.sector_id in pending
                and rec.kind is SectorKind.GOODS
                and model.A[j, i] * model.x[i] > 0.0
            ):
                graph.add_edge(rec.sector_id, sid)  # j's price feeds i

    condensed = nx.condensation(graph)
    for comp in nx.topological_sort(condensed):
        members = tuple(sorted(condensed.nodes[comp]["members"]))
        if len(members) == 1 and not graph.has_edge(members[0], members[0]):
            sid = members[0]
            row = _mass_row(model, prices, sid)
            prices[sid] = input_driven_price(
                model.x[model.index_of(sid)], row, waste_map[sid]
            )
        else:
            result.cycles.append(members)
            result.iterations[members] = _solve_cycle(
                model, prices, members, waste_map, tol, max_iter, warnings
            )
    return result
