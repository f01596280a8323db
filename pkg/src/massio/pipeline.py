"""Run orchestration: method selection, extension math, report emission.

For every goods sector the pipeline walks the method chain
data-driven -> price-driven -> input-driven (first viable method wins;
per-sector overrides pin a single method) and records the traversal in a
method ledger. With prices resolved it computes the physical production
vector and the mass-based intensity vector for every impact category,
then writes the canonical JSON outputs plus a human-readable report.

All inputs are parsed and cross-checked before any computation starts and
no output file is written if validation fails. A sector with no viable
method is reported as uncovered; the run still completes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping

import numpy as np

from . import crosswalk as cw
from . import ingest, jsonio
from .errors import ConfigError, NonConvergentCycle, SchemaViolation
from .massbalance import resolve_input_driven
from .model import EconomyModel, SectorKind, build_model
from .physical import (
    PhysicalVector,
    PriceEstimate,
    PriceMethod,
    PriceQuality,
    Unit,
    mass_intensity,
    physical_production,
)
from .prices import PriceImputationResult, impute_prices
from .quality import (
    PCT_DIFF_FORMULA,
    Availability,
    classify_coverage,
    compare_methods,
)

KG_PER_MT = 1e9  # million metric tons

OUTPUT_FILES = (
    "physical_production.json",
    "mass_intensity.json",
    "ledger.json",
    "comparison.json",
    "coverage.json",
    "report.txt",
)


@dataclass
class Datasets:
    """Everything parsed from the input files, cross-checked."""

    sectors: list
    A: np.ndarray
    d: np.ndarray
    x: np.ndarray
    impact_keys: list[str]
    R: np.ndarray
    trade: list[cw.TradeRecord] = field(default_factory=list)
    duty: list[cw.DutyRecord] = field(default_factory=list)
    hs2naics: cw.Concordance | None = None
    naics2bea: cw.Concordance | None = None
    tau: dict[str, float] = field(default_factory=dict)
    waste: dict[str, float] = field(default_factory=dict)
    production: dict[str, ingest.ProductionEntry] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def parse_inputs(config: ingest.RunConfig) -> Datasets:
    """Parse every configured file with strict schemas; fail-fast.

    Cross-file checks: concordance targets, tau/waste/production keys and
    method overrides must all refer to sectors declared in sectors.csv.
    """
    sectors = ingest.read_sectors(config.sectors)
    ids = [s.sector_id for s in sectors]
    id_set = set(ids)
    kind_of = {s.sector_id: s.kind for s in sectors}
    ds = Datasets(
        sectors=sectors,
        A=ingest.read_a_matrix(config.a, ids),
        d=ingest.read_vector(config.demand, ids),
        x=ingest.read_vector(config.gross_output, ids),
        impact_keys=[],
        R=np.zeros((0, len(ids))),
    )
    ds.impact_keys, ds.R = ingest.read_satellite(config.satellite, ids)

    if config.trade is not None:
        ds.trade = ingest.read_trade(config.trade)
        ds.duty = ingest.read_duty(config.duty)
        ds.hs2naics = cw.parse_concordance(
            config.hs2naics, source_kind="hs", target_kind="naics"
        )
        ds.naics2bea = cw.parse_concordance(
            config.naics2bea, source_kind="naics", target_kind="bea"
        )
        ds.warnings.extend(ds.hs2naics.warnings)
        ds.warnings.extend(ds.naics2bea.warnings)
        unknown = sorted(
            {bea for targets in ds.naics2bea.entries.values()
             for bea, _ in targets} - id_set
        )
        if unknown:
            raise SchemaViolation(
                f"concordance targets not in sectors.csv: {unknown}",
                path=config.naics2bea,
            )
    if config.tau is not None:
        ds.tau = ingest.read_tau(config.tau)
        _check_known(ds.tau, id_set, config.tau)
        for sid in sorted(ds.tau):
            if kind_of[sid] is not SectorKind.GOODS:
                ds.warnings.append(
                    f"tau ratio for non-goods sector {sid!r} is unused"
                )
    if config.waste is not None:
        ds.waste = ingest.read_waste(config.waste)
        _check_known(ds.waste, id_set, config.waste)
        for sid in sorted(ds.waste):
            if kind_of[sid] is not SectorKind.GOODS:
                ds.warnings.append(
                    f"waste coefficient for non-goods sector {sid!r} is unused"
                )
    if config.production is not None:
        ds.production = ingest.read_production(config.production)
        _check_known(ds.production, id_set, config.production)
        for sid in sorted(ds.production):
            if kind_of[sid] is not SectorKind.GOODS:
                raise SchemaViolation(
                    f"production mass given for non-goods sector {sid!r}",
                    path=config.production,
                )
    for sid in config.overrides:
        if sid not in id_set:
            raise ConfigError(f"method override for unknown sector {sid!r}")
        if kind_of[sid] is not SectorKind.GOODS:
            raise ConfigError(
                f"method override for non-goods sector {sid!r}"
            )
    return ds


def _check_known(mapping: Mapping[str, object], id_set: set[str], path) -> None:
    unknown = sorted(set(mapping) - id_set)
    if unknown:
        raise SchemaViolation(
            f"sector ids not in sectors.csv: {unknown}", path=path
        )


def _aggregate_trade(
    ds: Datasets, threads: int
) -> cw.AggregationResult | None:
    if ds.hs2naics is None:
        return None
    xwalk = cw.compose(ds.hs2naics, ds.naics2bea)
    if threads <= 1 or (len(ds.trade) + len(ds.duty)) < 2:
        return cw.aggregate(ds.trade, ds.duty, xwalk)
    # chunked aggregation; exact rational sums make the merge order-free
    def chunks(seq, k):
        size = max(1, (len(seq) + k - 1) // k)
        return [seq[i:i + size] for i in range(0, len(seq), size)] or [[]]

    trade_parts = chunks(sorted(ds.trade), threads)
    duty_parts = chunks(sorted(ds.duty), threads)
    parts = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(cw.aggregate, t, d, xwalk)
            for t, d in zip(
                trade_parts + [[]] * (len(duty_parts)),
                [[]] * len(trade_parts) + duty_parts,
            )
        ]
        parts = [f.result() for f in futures]
    return _merge_aggregation(parts)


def _merge_aggregation(parts: list[cw.AggregationResult]) -> cw.AggregationResult:
    cif: dict[str, Fraction] = {}
    weight: dict[str, Fraction] = {}
    duty: dict[str, Fraction] = {}
    diag = cw.AggregationDiagnostics()
    unmapped: set[str] = set()
    partial: set[str] = set()
    for part in parts:
        for agg in part.aggregates:
            cif[agg.sector_id] = cif.get(agg.sector_id, Fraction(0)) + agg.cif_total
            weight[agg.sector_id] = (
                weight.get(agg.sector_id, Fraction(0)) + agg.net_weight_total
            )
            duty[agg.sector_id] = (
                duty.get(agg.sector_id, Fraction(0)) + agg.duty_total
            )
        d = part.diagnostics
        diag.trade_rows += d.trade_rows
        diag.duty_rows += d.duty_rows
        diag.unmapped_cif += d.unmapped_cif
        diag.unmapped_weight += d.unmapped_weight
        diag.unmapped_duty += d.unmapped_duty
        unmapped.update(d.unmapped_codes)
        partial.update(d.partial_codes)
    diag.unmapped_codes = tuple(sorted(unmapped))
    diag.partial_codes = tuple(sorted(partial))
    from .prices import IndustryTradeAggregate

    aggregates = [
        IndustryTradeAggregate(
            sector_id=s,
            cif_total=cif.get(s, Fraction(0)),
            net_weight_total=weight.get(s, Fraction(0)),
            duty_total=duty.get(s, Fraction(0)),
        )
        for s in sorted(set(cif) | set(weight) | set(duty))
    ]
    return cw.AggregationResult(aggregates=aggregates, diagnostics=diag)


@dataclass
class LedgerEntry:
    sector_id: str
    method: PriceMethod | None
    quality: PriceQuality | None
    price: float | None
    chain: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass
class MethodResolution:
    estimates: dict[str, PriceEstimate]
    ledger: list[LedgerEntry]
    uncovered: dict[str, str]
    imputation: PriceImputationResult | None
    cycles: list[tuple[str, ...]] = field(default_factory=list)
    iterations: dict[tuple[str, ...], int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _resolve_methods(
    model: EconomyModel,
    ds: Datasets,
    aggregation: cw.AggregationResult | None,
    overrides: Mapping[str, str],
) -> MethodResolution:
    """Walk the method chain for every goods sector and price the rest."""
    goods = model.sectors_of_kind(SectorKind.GOODS)
    entries: dict[str, LedgerEntry] = {
        sid: LedgerEntry(sid, None, None, None) for sid in goods
    }
    estimates: dict[str, PriceEstimate] = {}
    warnings: list[str] = []

    imputation: PriceImputationResult | None = None
    price_driven: dict[str, PriceEstimate] = {}
    reject_reason: dict[str, str] = {}
    if aggregation is not None:
        goods_aggs = []
        for agg in aggregation.aggregates:
            if model.record(agg.sector_id).kind is SectorKind.GOODS:
                goods_aggs.append(agg)
            else:
                warnings.append(
                    f"trade aggregate for non-goods sector {agg.sector_id!r} ignored"
                )
        imputation = impute_prices(goods_aggs, ds.tau)
        warnings.extend(imputation.warnings)
        price_driven = {e.sector_id: e for e in imputation.estimates}
        reject_reason = {r.sector_id: f"rejected at {r.step}: {r.reason}"
                         for r in imputation.rejects}

    chain_of = {
        sid: [overrides[sid]] if sid in overrides else ["data", "price", "input"]
        for sid in goods
    }
    input_pool: set[str] = set()
    for sid in goods:
        entry = entries[sid]
        if sid in overrides:
            entry.chain.append(f"override: method pinned to {overrides[sid]!r}")
        for method in chain_of[sid]:
            if method == "data":
                prod = ds.production.get(sid)
                if prod is None:
                    entry.chain.append("data_driven: no production data")
                    continue
                price = model.x[model.index_of(sid)] / prod.mass_kg
                quality = (
                    PriceQuality.GOOD
                    if prod.coverage is Availability.GOOD
                    else PriceQuality.PARTIAL
                )
                estimates[sid] = PriceEstimate(
                    sid, price, PriceMethod.DATA_DRIVEN, quality
                )
                entry.chain.append("data_driven: direct production mass")
                break
            if method == "price":
                est = price_driven.get(sid)
                if est is None:
                    reason = reject_reason.get(sid, "no trade aggregate")
                    entry.chain.append(f"price_driven: {reason}")
                    continue
                estimates[sid] = est
                entry.chain.append("price_driven: imputed from trade data")
                if imputation and sid in imputation.defaulted_tau:
                    entry.warnings.append("tau ratio missing; defaulted to 1.0")
                break
            if method == "input":
                input_pool.add(sid)
                entry.chain.append("input_driven: queued for mass balance")
                break

    uncovered, cycles, iterations = _resolve_input_pool(
        model, ds, estimates, entries, input_pool, warnings
    )
    resolution = MethodResolution(
        estimates=estimates,
        ledger=[entries[sid] for sid in goods],
        uncovered=uncovered,
        imputation=imputation,
        cycles=cycles,
        iterations=iterations,
        warnings=warnings,
    )
    for entry in resolution.ledger:
        est = estimates.get(entry.sector_id)
        if est is not None:
            entry.method = est.method
            entry.quality = est.quality
            entry.price = est.price
    return resolution


def _resolve_input_pool(
    model: EconomyModel,
    ds: Datasets,
    estimates: dict[str, PriceEstimate],
    entries: dict[str, LedgerEntry],
    pool: set[str],
    warnings: list[str],
) -> tuple[dict[str, str], list[tuple[str, ...]], dict[tuple[str, ...], int]]:
    """Mass-balance the queued sectors; returns (uncovered, cycles, iterations)."""
    uncovered: dict[str, str] = {}

    def goods_inputs(sid: str) -> list[str]:
        i = model.index_of(sid)
        out = []
        for j, rec in enumerate(model.sectors):
            if (
                rec.kind is SectorKind.GOODS
                and model.A[j, i] * model.x[i] > 0.0
            ):
                out.append(rec.sector_id)
        return out

    while pool:
        # drop members whose mass balance cannot close, cascading
        dropped = True
        while dropped:
            dropped = False
            for sid in sorted(pool):
                inputs = goods_inputs(sid)
                if not inputs:
                    uncovered[sid] = (
                        "no mass-bearing inputs; input-driven price undefined"
                    )
                elif any(s in uncovered for s in inputs):
                    bad = sorted(s for s in inputs if s in uncovered)
                    uncovered[sid] = f"depends on uncovered input sector(s) {bad}"
                else:
                    continue
                entries[sid].chain.append(f"input_driven: {uncovered[sid]}")
                pool.discard(sid)
                dropped = True
                break
        if not pool:
            break
        resolved = {sid: est.price for sid, est in estimates.items()}
        try:
            res = resolve_input_driven(
                model, resolved, ds.waste, sectors=sorted(pool)
            )
        except NonConvergentCycle as exc:
            for sid in exc.cycle:
                uncovered[sid] = f"non-convergent dependency cycle {exc.cycle}"
                entries[sid].chain.append(f"input_driven: {uncovered[sid]}")
                pool.discard(sid)
            continue
        warnings.extend(res.warnings)
        for sid in res.newly_resolved:
            estimates[sid] = PriceEstimate(
                sid, res.prices[sid], PriceMethod.INPUT_DRIVEN,
                PriceQuality.MASS_BALANCE,
            )
            note = "input_driven: resolved from input mass balance"
            for members in res.cycles:
                if sid in members:
                    note += (
                        f" (cycle of {len(members)}, "
                        f"{res.iterations[members]} iterations)"
                    )
            entries[sid].chain.append(note)
            if sid in res.defaulted_waste:
                entries[sid].warnings.append(
                    "waste coefficient missing; defaulted to 0.0"
                )
        return uncovered, res.cycles, res.iterations
    return uncovered, [], {}


@dataclass
class RunResult:
    output_dir: Path
    files: tuple[Path, ...]
    uncovered: dict[str, str]
    warnings: list[str]


def run_pipeline(config: ingest.RunConfig, threads: int = 1) -> RunResult:
    """Execute the full extension pipeline and write the run outputs."""
    ds = parse_inputs(config)
    model = build_model(ds.sectors, ds.A, ds.d, ds.x, ds.R, ds.impact_keys)
    aggregation = _aggregate_trade(ds, threads)
    resolution = _resolve_methods(model, ds, aggregation, config.overrides)
    warnings = list(ds.warnings) + resolution.warnings

    # unity passthrough for services and support sectors
    estimates = dict(resolution.estimates)
    for rec in model.sectors:
        if rec.kind is not SectorKind.GOODS:
            estimates[rec.sector_id] = PriceEstimate.unity(rec.sector_id)

    physical = physical_production(model, ds.d, estimates, on_missing="nan")
    intensities = {
        key: mass_intensity(model, estimates, key, on_missing="nan")
        for key in ds.impact_keys
    }

    data_masses = {sid: e.mass_kg for sid, e in ds.production.items()}
    price_masses: dict[str, float] = {}
    if resolution.imputation is not None:
        for est in resolution.imputation.estimates:
            i = model.index_of(est.sector_id)
            price_masses[est.sector_id] = model.x[i] / est.price
    comparisons, not_comparable = compare_methods(data_masses, price_masses)

    inventory = []
    for rec in model.sectors:
        if rec.kind is SectorKind.SUPPORT:
            inventory.append((rec.sector_id, Availability.NO_FLOW))
        elif rec.kind is SectorKind.GOODS:
            prod = ds.production.get(rec.sector_id)
            inventory.append(
                (rec.sector_id, prod.coverage if prod else Availability.NONE)
            )
    classes, summary = classify_coverage(inventory)

    meta = {"year": config.year, "level": config.level.value}
    docs = {
        "physical_production.json": _physical_doc(meta, model, physical),
        "mass_intensity.json": _intensity_doc(
            meta, model, intensities, ds.impact_keys, resolution.uncovered
        ),
        "ledger.json": _ledger_doc(meta, resolution),
        "comparison.json": _comparison_doc(meta, comparisons, not_comparable),
        "coverage.json": _coverage_doc(meta, classes, summary),
    }
    diagnostics = _diagnostics(meta, aggregation, resolution, warnings)
    report_text = _render_report(
        meta, model, physical, comparisons, summary, resolution, warnings,
        diagnostics,
    )

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, doc in docs.items():
        jsonio.write_json(out / name, doc)
        written.append(out / name)
    (out / "report.txt").write_bytes(report_text.encode("utf-8"))
    written.append(out / "report.txt")
    return RunResult(
        output_dir=out,
        files=tuple(written),
        uncovered=resolution.uncovered,
        warnings=warnings,
    )


def _physical_doc(meta, model: EconomyModel, physical: PhysicalVector) -> dict:
    entries = []
    for i, rec in enumerate(model.sectors):
        entry = {
            "sector_id": rec.sector_id,
            "kind": rec.kind.value,
            "unit": physical.units[i].value,
            "value": float(physical.values[i]),
        }
        note = physical.notes.get(rec.sector_id)
        if note:
            entry["note"] = note
        entries.append(entry)
    return {"schema": "massio/physical_production@1", **meta, "entries": entries}


def _intensity_doc(meta, model, intensities, impact_keys, uncovered) -> dict:
    impacts = []
    for key in impact_keys:
        vec = intensities[key]
        entries = []
        excluded = []
        for i, sid in enumerate(vec.sector_ids):
            if vec.units[i] is Unit.NONE:
                kind = model.record(sid).kind
                if kind is SectorKind.SUPPORT:
                    reason = "support sector: no physical flows"
                else:
                    reason = uncovered.get(sid, "no price estimate")
                excluded.append({"sector_id": sid, "reason": reason})
                continue
            entries.append(
                {
                    "sector_id": sid,
                    "basis": "per_kg" if vec.units[i] is Unit.KG else "per_usd",
                    "value": float(vec.values[i]),
                }
            )
        impacts.append(
            {
                "key": key,
                "entries": entries,
                "excluded": excluded,
            }
        )
    return {"schema": "massio/mass_intensity@1", **meta, "impacts": impacts}


def _ledger_doc(meta, resolution: MethodResolution) -> dict:
    entries = []
    for entry in resolution.ledger:
        entries.append(
            {
                "sector_id": entry.sector_id,
                "method": entry.method.value if entry.method else None,
                "quality": entry.quality.value if entry.quality else None,
                "price_usd_per_kg": entry.price,
                "chain": list(entry.chain),
                "warnings": list(entry.warnings),
            }
        )
    doc = {"schema": "massio/ledger@1", **meta, "entries": entries}
    if resolution.imputation is not None:
        imp = resolution.imputation
        doc["duty_tiering"] = {
            "scope": imp.scope_note,
            "tiers": [
                {
                    "sector_id": t.sector_id,
                    "raw_rate": t.raw_rate,
                    "tier": t.tier.value,
                    "assigned_rate": t.assigned_rate,
                }
                for t in imp.tiers
            ],
            "rejects": [
                {"sector_id": r.sector_id, "step": r.step, "reason": r.reason}
                for r in imp.rejects
            ],
        }
    doc["uncovered"] = [
        {"sector_id": sid, "reason": reason}
        for sid, reason in sorted(resolution.uncovered.items())
    ]
    return doc


def _comparison_doc(meta, comparisons, not_comparable) -> dict:
    return {
        "schema": "massio/comparison@1",
        **meta,
        "formula": PCT_DIFF_FORMULA,
        "comparisons": [
            {
                "sector_id": c.sector_id,
                "mass_data_driven_kg": c.mass_data_driven,
                "mass_price_driven_kg": c.mass_price_driven,
                "pct_difference": c.pct_difference,
                "magnitude_mismatch": c.magnitude_mismatch,
            }
            for c in comparisons
        ],
        "not_comparable": [
            {"sector_id": sid, "reason": reason} for sid, reason in not_comparable
        ],
    }


def _coverage_doc(meta, classes, summary) -> dict:
    return {
        "schema": "massio/coverage@1",
        **meta,
        "classes": [
            {"sector_id": c.sector_id, "coverage": c.coverage.value}
            for c in classes
        ],
        "summary": {
            "good": summary.good,
            "partial": summary.partial,
            "no_flow": summary.no_flow,
            "no_data": summary.no_data,
            "total": summary.total,
            "no_data_pct": summary.no_data_pct,
        },
    }


def _diagnostics(meta, aggregation, resolution: MethodResolution, warnings) -> dict:
    diag = {"schema": "massio/diagnostics@1", **meta}
    if aggregation is not None:
        diag["crosswalk"] = aggregation.diagnostics.as_dict()
    if resolution.cycles:
        diag["input_driven_cycles"] = [
            {"members": list(members), "iterations": resolution.iterations[members]}
            for members in resolution.cycles
        ]
    diag["mass_balance_note"] = (
        "input masses derived from every intermediate input present in A; "
        "imported and domestic flows are not distinguished"
    )
    diag["warnings"] = list(warnings)
    return diag


def _fmt(value: float) -> str:
    return jsonio.format_number(value)


def _render_report(
    meta, model: EconomyModel, physical: PhysicalVector, comparisons,
    summary, resolution: MethodResolution, warnings, diagnostics,
) -> str:
    kinds = [rec.kind for rec in model.sectors]
    lines = [
        "massio run report",
        "=================",
        f"year: {meta['year']}",
        f"level: {meta['level']}",
        f"sectors: {model.n} (goods {kinds.count(SectorKind.GOODS)}, "
        f"service {kinds.count(SectorKind.SERVICE)}, "
        f"support {kinds.count(SectorKind.SUPPORT)})",
        "impact categories: " + ", ".join(c.key for c in model.impacts),
        f"note: {PCT_DIFF_FORMULA}",
        "note: input-driven prices use every intermediate input in A "
        "(imported and domestic flows are not distinguished)",
        "",
        "coverage (goods + support sectors)",
        "----------------------------------",
        f"good data:        {summary.good}",
        f"partial data:     {summary.partial}",
        f"no physical flow: {summary.no_flow}",
        f"no data:          {summary.no_data}",
        f"total:            {summary.total}",
        f"no-data share:    {summary.no_data_pct}%",
        "",
        "method ledger",
        "-------------",
    ]
    for entry in resolution.ledger:
        method = entry.method.value if entry.method else "UNCOVERED"
        quality = entry.quality.value if entry.quality else "-"
        price = _fmt(entry.price) if entry.price is not None else "-"
        lines.append(
            f"{entry.sector_id:<12} {method:<14} {quality:<13} {price}"
        )
    lines += ["", "physical production", "-------------------"]
    for i, rec in enumerate(model.sectors):
        unit = physical.units[i].value
        value = physical.values[i]
        if np.isnan(value):
            rendered, mt = "-", "-"
        else:
            rendered = _fmt(value)
            mt = _fmt(value / KG_PER_MT) if unit == "kg" else "-"
        lines.append(f"{rec.sector_id:<12} {unit:<5} {rendered:<18} {mt} Mt"
                     if mt != "-" else
                     f"{rec.sector_id:<12} {unit:<5} {rendered}")
    lines += ["", "method comparison (Mt)", "----------------------"]
    if comparisons:
        for c in comparisons:
            flag = "MAGNITUDE MISMATCH" if c.magnitude_mismatch else "ok"
            lines.append(
                f"{c.sector_id:<12} data {_fmt(c.mass_data_driven / KG_PER_MT):<15} "
                f"price {_fmt(c.mass_price_driven / KG_PER_MT):<15} "
                f"diff {_fmt(c.pct_difference)}% {flag}"
            )
    else:
        lines.append("(no sector has both a data-driven and a price-driven mass)")
    if resolution.uncovered:
        lines += ["", "uncovered sectors", "-----------------"]
        for sid, reason in sorted(resolution.uncovered.items()):
            lines.append(f"{sid:<12} {reason}")
    if warnings:
        lines += ["", "warnings", "--------"]
        lines += [f"- {w}" for w in warnings]
    lines += ["", "diagnostics (JSON)", "------------------",
              jsonio.dumps(diagnostics), ""]
    return "\n".join(lines)
