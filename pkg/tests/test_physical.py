"""Physical production vector, mass intensities and unit-tag discipline."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massio import (
    PriceEstimate,
    PriceMethod,
    PriceQuality,
    SectorKind,
    SectorRecord,
    Unit,
    apply_intensity,
    build_model,
    env_impacts,
    mass_intensity,
    physical_production,
    production_from_gross_output,
)
from massio.errors import MissingPrice, NonPositivePrice, UnitMismatch

from conftest import random_model, random_prices


def goods_price(sid, p):
    return PriceEstimate(sid, p, PriceMethod.DATA_DRIVEN, PriceQuality.GOOD)


@pytest.fixture
def prices_2x2():
    return {"G": goods_price("G", 2.0), "S": PriceEstimate.unity("S")}


@pytest.fixture
def model_3():
    """Goods + service + support, demand chosen to keep numbers readable."""
    return build_model(
        [
            SectorRecord("G", "goods", SectorKind.GOODS),
            SectorRecord("S", "svc", SectorKind.SERVICE),
            SectorRecord("P", "support", SectorKind.SUPPORT),
        ],
        np.zeros((3, 3)),
        [100.0, 200.0, 50.0],
        [100.0, 200.0, 50.0],
        [[0.5, 0.1, 0.2]],
        ["ghg_co2e"],
    )


class TestPhysicalProduction:
    def test_goods_division(self, model_2x2, prices_2x2):
        P = physical_production(model_2x2, [100, 50], prices_2x2)
        # x_hat = [500/3, 1000/9]; goods entry divided by 2.0 $/kg
        assert P.value("G") == pytest.approx(float(Fraction(500, 6)), abs=1e-9)
        assert P.unit("G") is Unit.KG

    def test_service_passthrough(self, model_2x2, prices_2x2):
        P = physical_production(model_2x2, [100, 50], prices_2x2)
        assert P.value("S") == pytest.approx(float(Fraction(1000, 9)), abs=1e-9)
        assert P.unit("S") is Unit.USD

    def test_support_zero_with_note(self, model_3):
        prices = {s: PriceEstimate.unity(s) for s in ("S", "P")}
        prices["G"] = goods_price("G", 2.0)
        P = physical_production(model_3, model_3.d, prices)
        assert P.value("P") == 0.0
        assert P.unit("P") is Unit.NONE
        assert "no physical flows" in P.notes["P"]

    def test_missing_price(self, model_2x2):
        with pytest.raises(MissingPrice):
            physical_production(model_2x2, [100, 50],
                                {"S": PriceEstimate.unity("S")})

    def test_nonpositive_price(self, model_2x2):
        prices = {"G": goods_price("G", 0.0), "S": PriceEstimate.unity("S")}
        with pytest.raises(NonPositivePrice):
            physical_production(model_2x2, [100, 50], prices)

    def test_on_missing_nan(self, model_2x2):
        P = physical_production(model_2x2, [100, 50],
                                {"S": PriceEstimate.unity("S")},
                                on_missing="nan")
        assert np.isnan(P.value("G"))
        assert P.unit("G") is Unit.NONE


class TestMassIntensity:
    def test_goods_rebased(self, model_2x2, prices_2x2):
        rs = mass_intensity(model_2x2, prices_2x2, "ghg_co2e")
        # 2.0 $/kg * 0.5 kg CO2e/$ = 1.0 kg CO2e/kg
        assert rs.value("G") == pytest.approx(1.0)
        assert rs.unit("G") is Unit.KG

    def test_service_unchanged(self, model_2x2, prices_2x2):
        rs = mass_intensity(model_2x2, prices_2x2, "ghg_co2e")
        assert rs.value("S") == pytest.approx(0.1)
        assert rs.unit("S") is Unit.USD

    def test_unity_price_goods(self, model_2x2):
        prices = {"G": goods_price("G", 1.0), "S": PriceEstimate.unity("S")}
        rs = mass_intensity(model_2x2, prices, "ghg_co2e")
        assert rs.value("G") == pytest.approx(0.5)

    def test_support_excluded(self, model_3):
        prices = {"G": goods_price("G", 2.0), "S": PriceEstimate.unity("S"),
                  "P": PriceEstimate.unity("P")}
        rs = mass_intensity(model_3, prices, "ghg_co2e")
        assert rs.excluded == ("P",)
        assert np.isnan(rs.value("P"))


class TestProductionFromGrossOutput:
    def test_division(self):
        assert production_from_gross_output(1_000_000, 2.0) == 500_000

    def test_zero_output(self):
        assert production_from_gross_output(0.0, 3.0) == 0.0

    def test_zero_price(self):
        with pytest.raises(NonPositivePrice):
            production_from_gross_output(100.0, 0.0)


class TestKeystoneIdentity:
    """E from the monetary extension equals r* (*) P wherever r* is defined."""

    def test_running_example(self, model_2x2, prices_2x2):
        E = env_impacts(model_2x2, [100, 50], "ghg_co2e")
        P = physical_production(model_2x2, [100, 50], prices_2x2)
        rs = mass_intensity(model_2x2, prices_2x2, "ghg_co2e")
        np.testing.assert_allclose(apply_intensity(rs, P), E, atol=1e-9)

    def test_random_models(self):
        rng = np.random.default_rng(101)
        for _ in range(25):
            m = random_model(rng)
            prices = random_prices(rng, m)
            E = env_impacts(m, m.d, "impact_0")
            P = physical_production(m, m.d, prices)
            rs = mass_intensity(m, prices, "impact_0")
            prod = apply_intensity(rs, P)
            defined = ~np.isnan(prod)
            assert np.abs(prod[defined] - E[defined]).max() < 1e-9
            # support sectors: P pinned to zero, intensity undefined
            for i, rec in enumerate(m.sectors):
                if rec.kind is SectorKind.SUPPORT:
                    assert P.values[i] == 0.0
                    assert not defined[i]

    @settings(max_examples=30, deadline=None)
    @given(factor=st.floats(min_value=0.01, max_value=100.0))
    def test_price_scaling_covariance(self, factor):
        """Scaling p leaves the sector impact r* * P invariant."""
        model_2x2 = build_model(
            [SectorRecord("G", "g", SectorKind.GOODS),
             SectorRecord("S", "s", SectorKind.SERVICE)],
            [[0.2, 0.3], [0.1, 0.4]], [100.0, 50.0], [1000.0, 800.0],
            [[0.5, 0.1]], ["ghg_co2e"],
        )
        base = {"G": goods_price("G", 2.0), "S": PriceEstimate.unity("S")}
        scaled = {"G": goods_price("G", 2.0 * factor),
                  "S": PriceEstimate.unity("S")}
        P0 = physical_production(model_2x2, [100, 50], base)
        P1 = physical_production(model_2x2, [100, 50], scaled)
        r0 = mass_intensity(model_2x2, base, "ghg_co2e")
        r1 = mass_intensity(model_2x2, scaled, "ghg_co2e")
        assert P1.value("G") == pytest.approx(P0.value("G") / factor)
        assert r1.value("G") == pytest.approx(r0.value("G") * factor)
        np.testing.assert_allclose(
            apply_intensity(r1, P1), apply_intensity(r0, P0), rtol=1e-12
        )


class TestUnitTags:
    def test_tags_propagate(self):
        rng = np.random.default_rng(55)
        for _ in range(20):
            m = random_model(rng)
            prices = random_prices(rng, m)
            P = physical_production(m, m.d, prices)
            rs = mass_intensity(m, prices, "impact_0")
            for i, rec in enumerate(m.sectors):
                want = {
                    SectorKind.GOODS: Unit.KG,
                    SectorKind.SERVICE: Unit.USD,
                    SectorKind.SUPPORT: Unit.NONE,
                }[rec.kind]
                assert P.units[i] is want
                assert rs.units[i] is want
            apply_intensity(rs, P)  # consistent tags never raise

    def test_mixed_tags_raise(self, model_2x2, prices_2x2):
        P = physical_production(model_2x2, [100, 50], prices_2x2)
        rs = mass_intensity(model_2x2, prices_2x2, "ghg_co2e")
        corrupted = rs.__class__(
            impact=rs.impact,
            sector_ids=rs.sector_ids,
            values=rs.values,
            units=(Unit.USD, Unit.USD),  # goods entry mislabeled
            excluded=rs.excluded,
        )
        with pytest.raises(UnitMismatch):
            apply_intensity(corrupted, P)

    def test_misaligned_sectors_raise(self, model_2x2, prices_2x2):
        P = physical_production(model_2x2, [100, 50], prices_2x2)
        rs = mass_intensity(model_2x2, prices_2x2, "ghg_co2e")
        shuffled = P.__class__(
            sector_ids=("S", "G"),
            values=P.values,
            units=P.units,
            notes=P.notes,
        )
        with pytest.raises(UnitMismatch):
            apply_intensity(rs, shuffled)
