"""Duty-rate tiering and the trade-based price pipeline."""

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massio import (
    DutyTier,
    IndustryTradeAggregate,
    TauRatio,
    assign_tiers,
    basic_price,
    duty_rate,
    impute_prices,
    producer_price,
    tier_bounds,
)
from massio.errors import (
    DegenerateRange,
    EmptyRates,
    NonPositiveTau,
    ZeroCif,
    ZeroWeight,
)
from massio.prices import compute_tier_assignments


def brute_force_tiers(rates):
    """Independent classifier: sort, direct interval comparison, plain means."""
    nonzero = sorted({r for r in rates.values() if r != 0.0})
    out = {}
    if not nonzero:
        return {s: (DutyTier.ZERO, 0.0) for s in rates}
    if len(nonzero) == 1:
        for s, r in rates.items():
            out[s] = (DutyTier.ZERO, 0.0) if r == 0 else (DutyTier.HIGH, nonzero[0])
        return out
    mn, mx = nonzero[0], nonzero[-1]
    b1 = mn + (mx - mn) / 3
    b2 = mn + 2 * (mx - mn) / 3
    groups = {DutyTier.LOW: [], DutyTier.MEDIUM: [], DutyTier.HIGH: []}
    tier_of = {}
    for s, r in rates.items():
        if r == 0:
            tier_of[s] = DutyTier.ZERO
            continue
        if r == mx or r >= b2:
            tier_of[s] = DutyTier.HIGH
        elif r >= b1:
            tier_of[s] = DutyTier.MEDIUM
        else:
            tier_of[s] = DutyTier.LOW
        groups[tier_of[s]].append(r)
    means = {t: sum(v) / len(v) if v else 0.0 for t, v in groups.items()}
    means[DutyTier.ZERO] = 0.0
    return {s: (tier_of[s], means[tier_of[s]]) for s in rates}


class TestDutyRate:
    def test_basic(self):
        assert duty_rate(15, 1000) == pytest.approx(0.015)

    def test_zero_duty(self):
        assert duty_rate(0, 500) == 0.0

    def test_zero_cif(self):
        with pytest.raises(ZeroCif):
            duty_rate(10, 0)


class TestTierBounds:
    def test_worked_example(self):
        b = tier_bounds({0.01, 0.02, 0.10, 0.25})
        # width (0.25 - 0.01)/3 = 0.08
        assert b.width == pytest.approx(0.08)
        (l0, l1), (m0, m1), (h0, h1) = b.intervals()
        assert (l0, l1) == pytest.approx((0.01, 0.09))
        assert (m0, m1) == pytest.approx((0.09, 0.17))
        assert (h0, h1) == pytest.approx((0.17, 0.25))

    def test_degenerate(self):
        with pytest.raises(DegenerateRange):
            tier_bounds({0.05, 0.05})

    def test_empty(self):
        with pytest.raises(EmptyRates):
            tier_bounds(set())

    def test_max_lands_high(self):
        b = tier_bounds({0.01, 0.25})
        assert b.classify(0.25) is DutyTier.HIGH


class TestAssignTiers:
    def test_worked_example(self):
        rates = {"A": 0.01, "B": 0.02, "C": 0.10, "D": 0.25, "E": 0.0}
        out = {a.sector_id: a for a in assign_tiers(rates, tier_bounds(
            {r for r in rates.values() if r}))}
        assert out["A"].tier is DutyTier.LOW
        assert out["B"].tier is DutyTier.LOW
        assert out["A"].assigned_rate == pytest.approx(0.015)
        assert out["B"].assigned_rate == pytest.approx(0.015)
        assert out["C"].tier is DutyTier.MEDIUM
        assert out["C"].assigned_rate == pytest.approx(0.10)
        assert out["D"].tier is DutyTier.HIGH
        assert out["D"].assigned_rate == pytest.approx(0.25)
        assert out["E"].tier is DutyTier.ZERO
        assert out["E"].assigned_rate == 0.0

    def test_single_nonzero_keeps_own_rate(self):
        out, warnings = compute_tier_assignments({"A": 0.07, "B": 0.0})
        by_id = {a.sector_id: a for a in out}
        assert by_id["A"].assigned_rate == pytest.approx(0.07)
        assert by_id["B"].tier is DutyTier.ZERO
        assert any("degenerate" in w for w in warnings)

    def test_all_zero(self):
        out, _ = compute_tier_assignments({"A": 0.0, "B": 0.0})
        assert all(a.tier is DutyTier.ZERO and a.assigned_rate == 0.0 for a in out)

    def test_oracle_agreement(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(1, 30))
            rates = {}
            for i in range(n):
                if rng.random() < 0.25:
                    rates[f"S{i:02d}"] = 0.0
                else:
                    rates[f"S{i:02d}"] = float(np.round(rng.uniform(0, 0.4), 6))
            got, _ = compute_tier_assignments(rates)
            want = brute_force_tiers(rates)
            for a in got:
                tier, mean = want[a.sector_id]
                assert a.tier is tier, (rates, a)
                assert abs(a.assigned_rate - mean) < 1e-12

    def test_assigned_rates_bracketed(self):
        rng = np.random.default_rng(99)
        for _ in range(50):
            rates = {f"S{i}": float(rng.uniform(0.001, 0.5))
                     for i in range(int(rng.integers(2, 20)))}
            got, _ = compute_tier_assignments(rates)
            lo, hi = min(rates.values()), max(rates.values())
            for a in got:
                assert lo - 1e-15 <= a.assigned_rate <= hi + 1e-15


class TestBasicPrice:
    def agg(self, cif, weight, duty=0):
        return IndustryTradeAggregate("A", Fraction(cif), Fraction(weight),
                                      Fraction(duty))

    def test_worked_example(self):
        assert basic_price(self.agg(1000, 500), 0.015) == pytest.approx(2.03)

    def test_zero_duty(self):
        assert basic_price(self.agg(100, 50), 0.0) == pytest.approx(2.0)

    def test_zero_weight(self):
        with pytest.raises(ZeroWeight):
            basic_price(self.agg(100, 0), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(
        r1=st.floats(min_value=0.0, max_value=0.5),
        dr=st.floats(min_value=1e-6, max_value=0.5),
        w1=st.floats(min_value=1.0, max_value=1e6),
        dw=st.floats(min_value=1.0, max_value=1e6),
    )
    def test_monotonic(self, r1, dr, w1, dw):
        a = self.agg(1000, 1)
        assert basic_price(a, r1 + dr) > basic_price(a, r1)
        b_small = IndustryTradeAggregate("A", Fraction(1000),
                                         Fraction(w1).limit_denominator(10**9),
                                         Fraction(0))
        b_large = IndustryTradeAggregate("A", Fraction(1000),
                                         Fraction(w1 + dw).limit_denominator(10**9),
                                         Fraction(0))
        assert basic_price(b_large, r1) < basic_price(b_small, r1)


class TestProducerPrice:
    def test_worked_example(self):
        assert producer_price(2.03, TauRatio("A", 1.015)) == pytest.approx(2.0)

    def test_identity_ratio(self):
        assert producer_price(3.7, TauRatio("A", 1.0)) == 3.7

    def test_zero_tau(self):
        with pytest.raises(NonPositiveTau):
            producer_price(2.0, TauRatio("A", 0.0))


class TestImputePrices:
    def make_aggs(self):
        # rates: A 0.01, B 0.02, C 0.10, D 0.25, E 0 (mirrors the tier example)
        rows = [
            ("A", 1000, 400, 10),
            ("B", 2000, 500, 40),
            ("C", 500, 100, 50),
            ("D", 800, 50, 200),
            ("E", 900, 300, 0),
        ]
        return [
            IndustryTradeAggregate(s, Fraction(c), Fraction(w), Fraction(d))
            for s, c, w, d in rows
        ]

    def test_full_pipeline(self):
        result = impute_prices(self.make_aggs(), {"A": 1.0, "B": 1.0, "C": 1.0,
                                                  "D": 1.0, "E": 1.0})
        assert len(result.estimates) == 5
        assert not result.rejects
        by_id = {e.sector_id: e for e in result.estimates}
        # A: assigned LOW mean 0.015 -> 1000*1.015/400
        assert by_id["A"].price == pytest.approx(1000 * 1.015 / 400)
        # E: zero duty -> plain cif/weight
        assert by_id["E"].price == pytest.approx(3.0)

    def test_empty_input(self):
        result = impute_prices([], {})
        assert result.estimates == [] and result.rejects == []

    def test_zero_weight_rejected(self):
        aggs = self.make_aggs()
        aggs.append(IndustryTradeAggregate("F", Fraction(100), Fraction(0),
                                           Fraction(1)))
        result = impute_prices(aggs, {})
        assert [r.sector_id for r in result.rejects] == ["F"]
        assert result.rejects[0].step == "basic_price"
        assert all(e.sector_id != "F" for e in result.estimates)

    def test_zero_cif_rejected_and_excluded_from_tiering(self):
        aggs = [IndustryTradeAggregate("Z", Fraction(0), Fraction(10),
                                       Fraction(0))] + self.make_aggs()
        result = impute_prices(aggs, {})
        assert any(r.sector_id == "Z" and r.step == "duty_rate"
                   for r in result.rejects)
        assert all(t.sector_id != "Z" for t in result.tiers)

    def test_missing_tau_defaults_with_warning(self):
        result = impute_prices(self.make_aggs(), {})
        assert set(result.defaulted_tau) == {"A", "B", "C", "D", "E"}
        assert any("defaulting to 1.0" in w for w in result.warnings)

    def test_order_independence(self):
        aggs = self.make_aggs()
        taus = {"A": 1.1, "B": 0.9, "C": 1.0, "D": 1.05, "E": 1.0}
        base = impute_prices(aggs, taus)
        rng = random.Random(5)
        for _ in range(5):
            shuffled = list(aggs)
            rng.shuffle(shuffled)
            again = impute_prices(shuffled, taus)
            assert again.estimates == base.estimates
            assert again.tiers == base.tiers
