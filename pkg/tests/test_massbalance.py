"""Input-driven pricing: Eq.-style mass balance and cycle resolution."""

from fractions import Fraction

import numpy as np
import pytest

from massio import (
    InputMassRow,
    SectorKind,
    SectorRecord,
    WasteCoefficient,
    build_model,
    derive_input_masses,
    input_driven_price,
    resolve_input_driven,
)
from massio.errors import (
    InvalidWasteCoefficient,
    NonConvergentCycle,
    UnresolvedDependency,
    ZeroInputMass,
)


class TestInputDrivenPrice:
    def test_worked_example(self):
        row = InputMassRow("i", {"a": 300.0, "b": 100.0})
        # 1200 / (0.8 * 400) = 3.75
        assert input_driven_price(1200, row, WasteCoefficient("i", 0.2)) == \
            pytest.approx(3.75)

    def test_no_waste(self):
        row = InputMassRow("i", {"a": 50.0})
        assert input_driven_price(100, row, WasteCoefficient("i", 0.0)) == 2.0

    def test_waste_one_invalid(self):
        with pytest.raises(InvalidWasteCoefficient):
            WasteCoefficient("i", 1.0)

    def test_negative_waste_invalid(self):
        with pytest.raises(InvalidWasteCoefficient):
            WasteCoefficient("i", -0.1)

    def test_zero_mass(self):
        with pytest.raises(ZeroInputMass):
            input_driven_price(100, InputMassRow("i", {}),
                               WasteCoefficient("i", 0.0))

    def test_waste_monotonic(self):
        row = InputMassRow("i", {"a": 500.0})
        prices = [
            input_driven_price(1000, row, WasteCoefficient("i", w))
            for w in (0.0, 0.1, 0.5, 0.9)
        ]
        assert prices == sorted(prices)
        assert len(set(prices)) == len(prices)


def two_goods_one_service():
    """i buys 600 USD from goods j (p=2) and 400 USD from service k."""
    sectors = [
        SectorRecord("i", "buyer", SectorKind.GOODS),
        SectorRecord("j", "goods in", SectorKind.GOODS),
        SectorRecord("k", "svc in", SectorKind.SERVICE),
    ]
    x = [2000.0, 5000.0, 3000.0]
    A = np.zeros((3, 3))
    A[1, 0] = 600 / 2000.0
    A[2, 0] = 400 / 2000.0
    return build_model(sectors, A, [10, 10, 10], x)


class TestDeriveInputMasses:
    def test_worked_example(self):
        m = two_goods_one_service()
        rows = derive_input_masses(m, {"j": 2.0}, sectors=["i"])
        assert rows["i"].masses == {"j": 300.0, "k": 0.0}
        assert rows["i"].total == 300.0

    def test_all_service_inputs_zero_mass(self):
        sectors = [
            SectorRecord("i", "buyer", SectorKind.GOODS),
            SectorRecord("k", "svc", SectorKind.SERVICE),
        ]
        A = np.array([[0.0, 0.0], [0.5, 0.0]])
        m = build_model(sectors, A, [1, 1], [100.0, 100.0])
        rows = derive_input_masses(m, {}, sectors=["i"])
        assert rows["i"].total == 0.0
        with pytest.raises(ZeroInputMass):
            input_driven_price(100.0, rows["i"], WasteCoefficient("i", 0.0))

    def test_unresolved_dependency(self):
        m = two_goods_one_service()
        with pytest.raises(UnresolvedDependency):
            derive_input_masses(m, {}, sectors=["i"])

    def test_defaults_to_unpriced_goods(self):
        m = two_goods_one_service()
        rows = derive_input_masses(m, {"j": 2.0, "i": 1.0})
        assert rows == {}


def cycle_model():
    """Two mutually dependent goods sectors plus a resolved supplier.

    C1 buys 400 USD from R and 200 USD from C2; C2 buys 900 USD from R and
    400 USD from C1. R is resolved at 4.0 $/kg, so C1 gets 100 kg and C2
    gets 225 kg of resolved inputs.
    """
    sectors = [
        SectorRecord("C1", "cyc1", SectorKind.GOODS),
        SectorRecord("C2", "cyc2", SectorKind.GOODS),
        SectorRecord("R", "resolved", SectorKind.GOODS),
        SectorRecord("S", "svc", SectorKind.SERVICE),
    ]
    x = [1000.0, 2000.0, 5000.0, 700.0]
    A = np.zeros((4, 4))
    A[2, 0] = 400 / 1000.0
    A[1, 0] = 200 / 1000.0
    A[2, 1] = 900 / 2000.0
    A[0, 1] = 400 / 2000.0
    A[3, 0] = 0.1
    return build_model(sectors, A, [100.0] * 4, x)


def cycle_closed_form():
    """Hand-solved simultaneous solution of the two mass-balance equations.

    p1 = x1 / (a*(k1 + m12/p2)), p2 = x2 / (b*(k2 + m21/p1)); substituting
    the first into the second makes p2 linear:
    p2 = (x2 - a*b*m12*m21/x1) / (b*(k2 + a*m21*k1/x1)).
    """
    a, b = Fraction(3, 4), Fraction(1)
    x1, x2 = Fraction(1000), Fraction(2000)
    k1, k2 = Fraction(100), Fraction(225)
    m12, m21 = Fraction(200), Fraction(400)
    p2 = (x2 - a * b * m12 * m21 / x1) / (b * (k2 + a * m21 * k1 / x1))
    p1 = x1 / (a * (k1 + m12 / p2))
    # closure must hold exactly in rational arithmetic
    assert p1 * a * (k1 + m12 / p2) == x1
    assert p2 * b * (k2 + m21 / p1) == x2
    return float(p1), float(p2)


class TestResolveInputDriven:
    def test_single_pass_no_cycle(self):
        m = two_goods_one_service()
        res = resolve_input_driven(m, {"j": 2.0}, {"i": 0.2})
        # p_i = 2000 / (0.8 * 300)
        assert res.prices["i"] == pytest.approx(2000 / (0.8 * 300))
        assert res.cycles == []

    def test_two_independent_sectors_one_pass(self):
        sectors = [
            SectorRecord("u1", "a", SectorKind.GOODS),
            SectorRecord("u2", "b", SectorKind.GOODS),
            SectorRecord("r", "c", SectorKind.GOODS),
        ]
        x = [100.0, 200.0, 50.0]
        A = np.zeros((3, 3))
        A[2, 0] = 0.5  # u1 buys only from r
        A[2, 1] = 0.25  # u2 buys only from r
        m = build_model(sectors, A, [1, 1, 1], x)
        res = resolve_input_driven(m, {"r": 5.0}, {})
        assert res.cycles == []
        assert res.prices["u1"] == pytest.approx(100 / (50 / 5.0))
        assert res.prices["u2"] == pytest.approx(200 / (50 / 5.0))
        assert set(res.defaulted_waste) == {"u1", "u2"}

    def test_cycle_matches_closed_form(self):
        m = cycle_model()
        p1, p2 = cycle_closed_form()
        res = resolve_input_driven(m, {"R": 4.0}, {"C1": 0.25, "C2": 0.0})
        assert res.cycles == [("C1", "C2")]
        assert res.prices["C1"] == pytest.approx(p1, abs=1e-8)
        assert res.prices["C2"] == pytest.approx(p2, abs=1e-8)

    def test_cycle_closure(self):
        m = cycle_model()
        res = resolve_input_driven(m, {"R": 4.0}, {"C1": 0.25, "C2": 0.0})
        waste = {"C1": 0.25, "C2": 0.0}
        for sid in ("C1", "C2"):
            i = m.index_of(sid)
            total = sum(
                m.A[j, i] * m.x[i] / res.prices[m.sectors[j].sector_id]
                for j in range(m.n)
                if m.sectors[j].kind is SectorKind.GOODS and m.A[j, i] > 0
            )
            closure = res.prices[sid] * (1 - waste[sid]) * total
            assert closure == pytest.approx(m.x[i], abs=1e-9)

    def test_fixed_point_validity(self):
        """Re-evaluating the balance at the solution moves no price."""
        m = cycle_model()
        res = resolve_input_driven(m, {"R": 4.0}, {"C1": 0.25, "C2": 0.0})
        rows = derive_input_masses(m, res.prices, sectors=["C1", "C2"])
        waste = {"C1": WasteCoefficient("C1", 0.25),
                 "C2": WasteCoefficient("C2", 0.0)}
        for sid in ("C1", "C2"):
            again = input_driven_price(m.x[m.index_of(sid)], rows[sid],
                                       waste[sid])
            assert abs(again - res.prices[sid]) / res.prices[sid] < 1e-8

    def test_nonconvergent_cycle_reported(self):
        m = cycle_model()
        with pytest.raises(NonConvergentCycle) as exc_info:
            resolve_input_driven(m, {"R": 4.0}, {"C1": 0.25, "C2": 0.0},
                                 max_iter=1)
        assert exc_info.value.cycle == ("C1", "C2")

    def test_self_loop_treated_as_cycle(self):
        sectors = [
            SectorRecord("u", "self-user", SectorKind.GOODS),
            SectorRecord("r", "supplier", SectorKind.GOODS),
        ]
        x = [1000.0, 500.0]
        A = np.zeros((2, 2))
        A[0, 0] = 0.2  # u consumes its own output
        A[1, 0] = 0.4
        m = build_model(sectors, A, [1, 1], x)
        res = resolve_input_driven(m, {"r": 2.0}, {"u": 0.0})
        assert res.cycles == [("u",)]
        # closed form: p*(200/p + 200) = 1000 -> p = 800/200 = 4.0
        assert res.prices["u"] == pytest.approx(4.0, abs=1e-8)

    def test_nothing_to_resolve(self):
        m = two_goods_one_service()
        res = resolve_input_driven(m, {"i": 1.0, "j": 2.0}, {})
        assert res.newly_resolved == ()
