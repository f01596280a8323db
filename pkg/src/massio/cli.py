"""Command-line interface.

Subcommands:
    model build     validate model CSVs and print a summary
    prices estimate trade-based price estimation from files alone
    extend          full pipeline from a run.toml config
    compare / coverage / report   re-display outputs of a prior run
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import crosswalk as cw
from . import ingest, jsonio
from .errors import MassioError
from .model import SectorKind, build_model
from .pipeline import run_pipeline
from .prices import impute_prices


def _fail(exc: Exception, code: int = 2) -> None:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(doc, sort_keys=True), err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Physically and environmentally extended input-output modeling."""


@main.group()
def model() -> None:
    """Economic model commands."""


@model.command("build")
@click.option("--sectors", required=True, type=click.Path(path_type=Path))
@click.option("--a", "a_path", required=True, type=click.Path(path_type=Path))
@click.option("--demand", required=True, type=click.Path(path_type=Path))
@click.option("--output", "gross_output", required=True,
              type=click.Path(path_type=Path), help="Gross output x.csv.")
@click.option("--satellite", required=True, type=click.Path(path_type=Path))
def model_build(sectors, a_path, demand, gross_output, satellite) -> None:
    """Validate model input files and print a canonical summary."""
    try:
        records = ingest.read_sectors(sectors)
        ids = [s.sector_id for s in records]
        A = ingest.read_a_matrix(a_path, ids)
        d = ingest.read_vector(demand, ids)
        x = ingest.read_vector(gross_output, ids)
        keys, R = ingest.read_satellite(satellite, ids)
        m = build_model(records, A, d, x, R, keys)
    except MassioError as exc:
        _fail(exc)
        return
    kinds = [rec.kind for rec in m.sectors]
    click.echo(jsonio.dumps({
        "schema": "massio/model_summary@1",
        "sectors": m.n,
        "goods": kinds.count(SectorKind.GOODS),
        "service": kinds.count(SectorKind.SERVICE),
        "support": kinds.count(SectorKind.SUPPORT),
        "impacts": [c.key for c in m.impacts],
        "max_column_sum": float(m.A.sum(axis=0).max()),
    }))


@main.group()
def prices() -> None:
    """Price estimation commands."""


@prices.command("estimate")
@click.option("--trade", required=True, type=click.Path(path_type=Path))
@click.option("--duty", required=True, type=click.Path(path_type=Path))
@click.option("--hs2naics", required=True, type=click.Path(path_type=Path))
@click.option("--naics2bea", required=True, type=click.Path(path_type=Path))
@click.option("--tau", type=click.Path(path_type=Path))
@click.option("--waste", type=click.Path(path_type=Path))
@click.option("--production", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path),
              help="Write the JSON bundle here instead of stdout.")
def prices_estimate(trade, duty, hs2naics, naics2bea, tau, waste,
                    production, out) -> None:
    """Estimate trade-based prices; bundle everything file-resolvable.

    Emits price-driven producer prices with the duty-tier table and reject
    list, plus validated direct production masses and waste coefficients
    for the model-dependent stages run by `extend`.
    """
    try:
        trade_records = ingest.read_trade(trade)
        duty_records = ingest.read_duty(duty)
        h2n = cw.parse_concordance(hs2naics, source_kind="hs",
                                   target_kind="naics")
        n2b = cw.parse_concordance(naics2bea, source_kind="naics",
                                   target_kind="bea")
        tau_map = ingest.read_tau(tau) if tau else {}
        waste_map = ingest.read_waste(waste) if waste else {}
        production_map = ingest.read_production(production) if production else {}
        agg = cw.aggregate(trade_records, duty_records, cw.compose(h2n, n2b))
        result = impute_prices(agg.aggregates, tau_map)
    except MassioError as exc:
        _fail(exc)
        return
    doc = {
        "schema": "massio/price_estimates@1",
        "price_driven": {
            "estimates": [
                {
                    "sector_id": e.sector_id,
                    "price_usd_per_kg": e.price,
                    "method": e.method.value,
                    "quality": e.quality.value if e.quality else None,
                }
                for e in result.estimates
            ],
            "tiers": [
                {
                    "sector_id": t.sector_id,
                    "raw_rate": t.raw_rate,
                    "tier": t.tier.value,
                    "assigned_rate": t.assigned_rate,
                }
                for t in result.tiers
            ],
            "rejects": [
                {"sector_id": r.sector_id, "step": r.step, "reason": r.reason}
                for r in result.rejects
            ],
            "scope": result.scope_note,
            "warnings": list(result.warnings),
        },
        "data_driven_masses": [
            {"sector_id": sid, "mass_kg": e.mass_kg,
             "coverage": e.coverage.value}
            for sid, e in sorted(production_map.items())
        ],
        "waste_coefficients": [
            {"sector_id": sid, "w": w} for sid, w in sorted(waste_map.items())
        ],
        "crosswalk_diagnostics": agg.diagnostics.as_dict(),
    }
    text = jsonio.dumps(doc)
    if out:
        Path(out).write_bytes((text + "\n").encode("utf-8"))
    else:
        click.echo(text)


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(path_type=Path))
@click.option("--threads", default=1, show_default=True,
              help="Worker threads for per-record crosswalk aggregation.")
def extend(config_path, threads) -> None:
    """Run the full physical/environmental extension pipeline."""
    try:
        config = ingest.read_run_config(config_path)
        result = run_pipeline(config, threads=threads)
    except MassioError as exc:
        _fail(exc)
        return
    click.echo(f"wrote {len(result.files)} files to {result.output_dir}")
    for sid, reason in sorted(result.uncovered.items()):
        click.echo(f"uncovered: {sid}: {reason}", err=True)


def _load_run_file(run_dir: Path, name: str) -> dict:
    path = Path(run_dir) / name
    if not path.is_file():
        raise MassioError(
            f"{path} not found; point --run-dir at a prior `extend` output directory"
        )
    return json.loads(path.read_text(encoding="utf-8"))


@main.command()
@click.option("--run-dir", default=".", type=click.Path(path_type=Path),
              show_default=True)
def compare(run_dir) -> None:
    """Print the data-driven vs price-driven comparison of a prior run."""
    try:
        doc = _load_run_file(run_dir, "comparison.json")
    except MassioError as exc:
        _fail(exc)
        return
    click.echo(f"formula: {doc['formula']}")
    for c in doc["comparisons"]:
        flag = "MAGNITUDE MISMATCH" if c["magnitude_mismatch"] else "ok"
        click.echo(
            f"{c['sector_id']:<12} data {c['mass_data_driven_kg']:.6g} kg  "
            f"price {c['mass_price_driven_kg']:.6g} kg  "
            f"diff {c['pct_difference']:.4g}%  {flag}"
        )
    for row in doc["not_comparable"]:
        click.echo(f"{row['sector_id']:<12} not comparable: {row['reason']}")


@main.command()
@click.option("--run-dir", default=".", type=click.Path(path_type=Path),
              show_default=True)
def coverage(run_dir) -> None:
    """Print the coverage classification of a prior run."""
    try:
        doc = _load_run_file(run_dir, "coverage.json")
    except MassioError as exc:
        _fail(exc)
        return
    s = doc["summary"]
    click.echo(
        f"good {s['good']}  partial {s['partial']}  no-flow {s['no_flow']}  "
        f"no-data {s['no_data']}  total {s['total']}  "
        f"no-data share {s['no_data_pct']}%"
    )
    for row in doc["classes"]:
        click.echo(f"{row['sector_id']:<12} {row['coverage']}")


@main.command()
@click.option("--run-dir", default=".", type=click.Path(path_type=Path),
              show_default=True)
def report(run_dir) -> None:
    """Print the text report of a prior run."""
    path = Path(run_dir) / "report.txt"
    if not path.is_file():
        _fail(MassioError(
            f"{path} not found; point --run-dir at a prior `extend` output directory"
        ))
        return
    click.echo(path.read_text(encoding="utf-8"), nl=False)


if __name__ == "__main__":
    main()
