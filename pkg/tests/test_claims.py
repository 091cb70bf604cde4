import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gexpect.claims import (
    Band,
    Constant,
    Event,
    FunctionClaim,
    LinearForm,
    TableClaim,
    combine,
    coord,
    indicator,
    is_comonotonic,
    band_witness,
    cross_witness,
    parse_claim,
)
from gexpect.lattice import build_lattice


def test_indicator_at_the_atom_is_included():
    m = build_lattice(1, 1.0, 2)
    vals = indicator(Event.threshold(1, 0.0)).values(m)
    # terminal nodes are stored in ascending W: -sqrt2, 0, sqrt2
    assert vals.tolist() == [0.0, 1.0, 1.0]


def test_indicator_of_omega_and_empty():
    assert indicator(Event.always()) == Constant(1.0, label="ind(Omega)")
    assert indicator(Event.never()).value == 0.0


def test_general_event_indicator():
    m = build_lattice(2, 1.0, 3)
    ev = Event(lambda w: w[..., 0] * w[..., 1] > 0, "w1w2>0")
    vals = indicator(ev).values(m)
    w = m.terminal_w()
    assert np.array_equal(vals, (w[..., 0] * w[..., 1] > 0).astype(float))


def test_combine_values():
    m = build_lattice(1, 1.0, 6)
    a, b = Band((1.0,), -0.5), Band((1.0,), 0.2)
    s = combine([a, b], [1, 1]).values(m)
    assert set(np.unique(s).tolist()) <= {0.0, 1.0, 2.0}
    f = LinearForm((1.0,))
    assert np.array_equal(combine([f], [-1]).values(m), -f.values(m))
    with pytest.raises(ValueError):
        combine([a, b], [1.0])


def test_band_witness_sum():
    m = build_lattice(1, 1.0, 16)
    x1, x2 = band_witness(1.0)
    w = m.terminal_w()[:, 0]
    total = combine([x1, x2], [1, 1]).values(m)
    assert np.array_equal(total, (w >= -1 - 1e-12) * 1.0 + ((w >= -1 - 1e-12) & (w <= 1e-12)))
    assert is_comonotonic(m, x1, x2)


def test_comonotonic_examples():
    m = build_lattice(1, 1.0, 20)
    assert is_comonotonic(m, Band((1.0,), -0.3), Band((1.0,), -0.3, 0.8))
    assert is_comonotonic(m, LinearForm((1.0,)), Constant(4.0))
    m2 = build_lattice(2, 1.0, 8)
    assert not is_comonotonic(m2, coord(1), coord(2))
    i1, i2 = cross_witness(1.0)
    for lam in (0.0, 0.25, 0.5, 1.0):
        assert is_comonotonic(m2, (1 - lam) * i1, lam * (i1 + i2))


@given(
    st.lists(st.integers(-2, 2), min_size=9, max_size=9),
    st.lists(st.integers(-2, 2), min_size=9, max_size=9),
)
@settings(max_examples=200, deadline=None)
def test_sorted_test_matches_brute_force(xs, ys):
    m = build_lattice(1, 1.0, 8)
    x, y = TableClaim(np.array(xs, float)), TableClaim(np.array(ys, float))
    assert is_comonotonic(m, x, y, exhaustive=True) == is_comonotonic(m, x, y, exhaustive=False)


@given(st.lists(st.integers(-3, 3), min_size=16, max_size=16))
@settings(max_examples=60, deadline=None)
def test_monotone_transforms_are_comonotone(xs):
    m = build_lattice(2, 1.0, 3)
    x = np.array(xs, float).reshape(4, 4)
    assert is_comonotonic(m, TableClaim(x), TableClaim(np.tanh(x) + x**3))
    assert is_comonotonic(m, TableClaim(x), TableClaim(np.tanh(x) + x**3), exhaustive=False)


@pytest.mark.parametrize(
    "spec, lo, hi, coeffs",
    [
        ("ind(w1>=-1)", -1.0, math.inf, (1.0,)),
        ("ind(0>=w1>=-1)", -1.0, 0.0, (1.0,)),
        ("ind(w1<=0.5)", -math.inf, 0.5, (1.0,)),
        ("ind(-1<=w2<=2)", -1.0, 2.0, (0.0, 1.0)),
        ("ind(0.7*w1+0.7*w2>=0)", 0.0, math.inf, (0.7, 0.7)),
        ("ind(w1-2w2>=1e-3)", 1e-3, math.inf, (1.0, -2.0)),
    ],
)
def test_parse_conditions(spec, lo, hi, coeffs):
    b = parse_claim(spec)
    assert isinstance(b, Band)
    assert (b.lo, b.hi, b.coeffs) == (lo, hi, coeffs)


@pytest.mark.parametrize("spec", ["ind(w1>0)", "ind(w1<1)", "ind(w1>=0<=1)", "ind(1>=2)", "foo(w1)", "scale(2)", "sum(w1", "coord(x)", "const(nan)", "2*x"])
def test_parse_rejects(spec):
    with pytest.raises(ValueError):
        parse_claim(spec)


def test_parse_composites():
    m = build_lattice(2, 1.0, 5)
    c = parse_claim("sum(ind(w1>=1),scale(0.5,ind(w2>=0)),const(2),coord(2),0.5*w1-w2)")
    w = m.terminal_w()
    expect = (w[..., 0] >= 1 - 1e-12) + 0.5 * (w[..., 1] >= -1e-12) + 2 + w[..., 1] + 0.5 * w[..., 0] - w[..., 1]
    assert np.allclose(c.values(m), expect, atol=1e-14)


@pytest.mark.parametrize("spec", ["ind(w1>=-1)", "ind(0>=w1>=-1)", "sum(ind(w1>=-1),ind(0>=w1>=-1))", "scale(0.5,ind(w2>=0))"])
def test_labels_reparse(spec):
    c = parse_claim(spec)
    assert parse_claim(c.label).label == c.label


@pytest.mark.parametrize("coeffs, lo, hi", [((1.0,), -1.0, math.inf), ((1.0,), -1.0, 0.0), ((0.6, 0.8), -0.2, 0.9), ((1.0, -1.0), 0.0, math.inf)])
def test_band_cell_average_matches_quadrature(coeffs, lo, hi):
    m = build_lattice(len(coeffs), 1.0, 7)
    b = Band(coeffs, lo, hi)
    exact = b.values(m, "cell")
    # brute-force midpoint rule on a fine sub-grid
    fine = FunctionClaim(b.evaluate)
    k = 400 if len(coeffs) == 1 else 160
    w, s = m.terminal_w(), m.increment
    u = (np.arange(k) + 0.5) / k * 2 - 1
    if len(coeffs) == 1:
        approx = np.mean(b.evaluate((w[:, None, 0] + s * u)[..., None]), axis=-1)
    else:
        g1, g2 = np.meshgrid(u, u, indexing="ij")
        pts = w[..., None, None, :] + s * np.stack([g1, g2], -1)
        approx = b.evaluate(pts).mean(axis=(-1, -2))
    assert np.allclose(exact, approx, atol=3.0 / k)
    assert fine.values(m, "cell").shape == exact.shape


def test_cell_mode_of_linear_form_is_exact():
    m = build_lattice(2, 1.0, 4)
    f = LinearForm((0.3, -1.2))
    assert np.allclose(f.values(m, "cell"), f.values(m, "node"), atol=1e-15)


def test_table_claim_guards():
    m = build_lattice(1, 1.0, 3)
    t = TableClaim(np.arange(4.0))
    assert t.values(m).tolist() == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        t.values(m, "cell")
    with pytest.raises(ValueError):
        t.values(build_lattice(1, 1.0, 4))
    with pytest.raises(ValueError):
        t.values(m, "midpoint")


def test_projection():
    m = build_lattice(2, 1.0, 6)
    a = (0.6, 0.8)
    f = parse_claim("ind(w1>=0)").project(a)
    w = m.terminal_w()
    assert np.array_equal(f.values(m), ((0.6 * w[..., 0] + 0.8 * w[..., 1]) >= -1e-12) * 1.0)
    with pytest.raises(ValueError):
        parse_claim("ind(w2>=0)").project(a)


def test_non_finite_claim_rejected():
    m = build_lattice(1, 1.0, 2)
    with pytest.raises(ValueError):
        FunctionClaim(lambda w: np.where(w[..., 0] > 0, np.inf, 0.0)).values(m)
