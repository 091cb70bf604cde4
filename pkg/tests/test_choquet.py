import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gexpect.bsde import g_probability, solve_bsde
from gexpect.choquet import (
    capacity_curve,
    choquet_expectation,
    choquet_property_suite,
    choquet_quadrature,
    distinct_levels,
)
from gexpect.claims import Band, Constant, Event, TableClaim, band_witness, parse_claim
from gexpect.generators import absolute, euclid, linear, y_control, zero
from gexpect.lattice import build_lattice


def test_indicator_curve():
    m = build_lattice(1, 1.0, 50)
    g = absolute(0.5)
    xi = Band((1.0,), -1.0)
    curve = capacity_curve(m, g, xi)
    assert curve.levels == (0.0, 1.0)
    assert curve.capacities == (1.0, g_probability(m, g, Event.threshold(1, -1.0)))
    assert choquet_expectation(m, g, xi).value == solve_bsde(m, g, xi).y0


def test_zero_generator_curve_is_the_survival_function():
    m = build_lattice(1, 1.0, 12)
    xi = parse_claim("sum(ind(w1>=-1),ind(0>=w1>=-1))")
    vals = xi.values(m)
    p = m.terminal_weights()
    curve = capacity_curve(m, zero(), xi)
    for v, cap in zip(curve.levels, curve.capacities):
        assert cap == pytest.approx(float(np.sum(p[vals >= v])), abs=1e-14)


def test_constant_claim():
    m = build_lattice(1, 1.0, 10)
    res = choquet_expectation(m, absolute(0.5), Constant(2.5))
    assert res.curve.levels == (2.5,) and res.curve.capacities == (1.0,) and res.value == 2.5


def test_three_level_layered_sum():
    m = build_lattice(1, 1.0, 40)
    g = absolute(0.5)
    xi = parse_claim("sum(ind(w1>=-1),ind(0>=w1>=-1))")
    vals = xi.values(m)
    res = choquet_expectation(m, g, xi)
    v1 = solve_bsde(m, g, (vals >= 1) * 1.0).y0
    v2 = solve_bsde(m, g, (vals >= 2) * 1.0).y0
    assert res.value == pytest.approx(v1 + v2, abs=1e-15)


@given(st.lists(st.floats(-5, 5), min_size=31, max_size=31))
@settings(max_examples=30, deadline=None)
def test_zero_generator_choquet_is_the_mean(vals):
    m = build_lattice(1, 1.0, 30)
    table = np.array(vals)
    c = choquet_expectation(m, zero(), table).value
    assert c == pytest.approx(float(np.dot(m.terminal_weights(), table)), abs=1e-12)


@pytest.mark.parametrize("spec", ["sum(ind(w1>=-1),ind(0>=w1>=-1))", "scale(-2,ind(w1>=0.3))", "sum(const(-1),scale(0.5,ind(1>=w1>=-0.5)))"])
def test_quadrature_cross_check(spec):
    m = build_lattice(1, 1.0, 60)
    res = choquet_expectation(m, absolute(0.5), parse_claim(spec))
    assert choquet_quadrature(res.curve) == pytest.approx(res.value, abs=1e-9)


def test_merge_tolerance():
    levels, index = distinct_levels(np.array([0.0, 1.0, 1.0 + 1e-14, 2.0]))
    assert levels.tolist() == [0.0, 1.0, 2.0]
    assert index.tolist() == [0, 1, 1, 2]


def test_survival_lookup():
    m = build_lattice(1, 1.0, 20)
    curve = capacity_curve(m, absolute(0.5), parse_claim("sum(ind(w1>=-1),ind(0>=w1>=-1))"))
    assert curve.survival(-1.0) == 1.0 and curve.survival(0.0) == 1.0
    assert curve.survival(0.5) == curve.capacities[1]
    assert curve.survival(2.5) == 0.0


def test_unnormalised_generator_rejected():
    m = build_lattice(1, 1.0, 10)

    from gexpect.generators import Generator

    bad = Generator(lambda t, y, z: np.ones(z.shape[:-1]), 0.0, 1, "one")
    with pytest.raises(ValueError):
        capacity_curve(m, bad, Band((1.0,), 0.0))


def test_workers_do_not_change_the_result():
    m = build_lattice(1, 1.0, 80)
    xi = TableClaim(np.round(np.sin(np.arange(81.0)), 2))
    a = choquet_expectation(m, absolute(0.5), xi)
    b = choquet_expectation(m, absolute(0.5), xi, workers=4)
    assert a.value == b.value and a.curve == b.curve


def test_property_suite_abs():
    m = build_lattice(1, 1.0, 40)
    rng = np.random.default_rng(7)
    claims = [TableClaim(rng.integers(-3, 4, 41).astype(float)) for _ in range(4)]
    x1, x2 = band_witness()
    rep = choquet_property_suite(m, absolute(0.5), claims + [x1], [(x1, x2)])
    assert rep.passed(1e-10)
    assert rep.indicator_mismatch == 0.0


def test_property_suite_refuses_non_comonotone_pair():
    m = build_lattice(2, 1.0, 6)
    with pytest.raises(ValueError):
        choquet_property_suite(m, euclid(0.5), [], [(parse_claim("w1"), parse_claim("w2"))])


def test_comonotone_additivity_2d():
    m = build_lattice(2, 1.0, 30)
    i1, i2 = Band((1.0, 0.0), 1.0), Band((0.0, 1.0), 0.0)
    x, y = 0.5 * i1, 0.5 * (i1 + i2)
    rep = choquet_property_suite(m, euclid(0.5), [i1, i2], [(x, y)])
    assert rep.comonotonic_additivity <= 1e-10


def test_nonlinear_y_generator_breaks_translation():
    m = build_lattice(1, 1.0, 20)
    with pytest.raises(ValueError):
        # g(t, y, 0) != 0, so P_g(Omega) != 1
        capacity_curve(m, y_control(0.5), Band((1.0,), 0.0))


def test_linear_generator_choquet_equals_expectation():
    m = build_lattice(1, 1.0, 100)
    xi = parse_claim("sum(ind(w1>=-1),ind(0>=w1>=-1))")
    e = solve_bsde(m, linear(0.3), xi).y0
    c = choquet_expectation(m, linear(0.3), xi).value
    assert abs(e - c) <= 1e-12
