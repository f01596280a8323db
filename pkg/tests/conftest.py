import shutil
from pathlib import Path

import numpy as np
import pytest

from massio import (
    ClassificationLevel,
    SectorKind,
    SectorRecord,
    build_model,
)

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    outcome = "PASSED" if report.passed else "FAILED"
    print(f"\n[ACCEPTANCE] {name}: {outcome}", flush=True)


@pytest.fixture
def model_2x2():
    """The running 2-sector example: one goods, one service sector."""
    return build_model(
        [
            SectorRecord("G", "Goods", SectorKind.GOODS),
            SectorRecord("S", "Services", SectorKind.SERVICE),
        ],
        [[0.2, 0.3], [0.1, 0.4]],
        [100.0, 50.0],
        [1000.0, 800.0],
        [[0.5, 0.1]],
        ["ghg_co2e"],
    )


@pytest.fixture
def toy5_dir(tmp_path):
    """Writable copy of the bundled 5-sector toy economy."""
    dst = tmp_path / "toy5"
    shutil.copytree(FIXTURES / "toy5", dst)
    return dst


def random_model(rng, n=None, kinds="mixed", max_col_sum=0.8, impacts=1):
    """Random valid economy for property tests.

    Column sums of A are scaled to lie in (0.05, max_col_sum]; demand is
    non-negative, gross output strictly positive.
    """
    if n is None:
        n = int(rng.integers(2, 13))
    records = []
    for i in range(n):
        if kinds == "goods":
            kind = SectorKind.GOODS
        else:
            kind = rng.choice(
                [SectorKind.GOODS, SectorKind.SERVICE, SectorKind.SUPPORT],
                p=[0.6, 0.3, 0.1],
            )
        records.append(
            SectorRecord(f"S{i:03d}", f"sector {i}", kind,
                         ClassificationLevel.SUMMARY_71)
        )
    A = rng.random((n, n))
    targets = rng.uniform(0.05, max_col_sum, size=n)
    A *= targets / A.sum(axis=0)
    d = rng.uniform(0.0, 500.0, size=n)
    x = rng.uniform(10.0, 1e6, size=n)
    R = rng.uniform(0.0, 2.0, size=(impacts, n))
    keys = [f"impact_{k}" for k in range(impacts)]
    return build_model(records, A, d, x, R, keys)


def random_prices(rng, model):
    """Strictly positive goods prices spanning several decades."""
    from massio import PriceEstimate, PriceMethod, PriceQuality

    out = {}
    for rec in model.sectors:
        if rec.kind is SectorKind.GOODS:
            p = float(10.0 ** rng.uniform(-3, 2))
            out[rec.sector_id] = PriceEstimate(
                rec.sector_id, p, PriceMethod.DATA_DRIVEN, PriceQuality.GOOD
            )
        else:
            out[rec.sector_id] = PriceEstimate.unity(rec.sector_id)
    return out
