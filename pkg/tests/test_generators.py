import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gexpect.generators import (
    Generator,
    SampleSpec,
    absolute,
    check_hypotheses,
    default_sample,
    euclid,
    kink,
    linear,
    parse_generator,
    probe_additivity,
    probe_positive_homogeneity,
    restrict_to_direction,
    step_linear,
    y_control,
    zero,
)


def test_linear_hypotheses():
    rep = check_hypotheses(linear(0.3))
    assert rep.h3_max_violation == 0.0
    assert rep.lipschitz_estimate <= 0.3 + 1e-12
    assert rep.passed


@pytest.mark.parametrize("k", [0.1, 0.5, 2.0])
def test_abs_hypotheses(k):
    rep = check_hypotheses(absolute(k))
    assert rep.h3_max_violation == 0.0 and rep.lipschitz_estimate <= k + 1e-12


def test_y_dependence_violates_h3():
    rep = check_hypotheses(y_control(1.0))
    assert rep.h3_max_violation > 0 and not rep.passed


def test_understated_lipschitz_fails():
    g = Generator(lambda t, y, z: 2.0 * z[..., 0], 1.0, 1, "liar")
    assert not check_hypotheses(g).passed


def test_homogeneity_probe():
    assert probe_positive_homogeneity(absolute(0.5)).max_deviation == 0.0
    assert probe_positive_homogeneity(linear(0.3)).max_deviation <= 1e-15
    square = Generator(lambda t, y, z: z[..., 0] ** 2, 4.0, 1, "square", positively_homogeneous=False)
    rep = probe_positive_homogeneity(square)
    assert rep.max_deviation > 0
    sample = SampleSpec((0.0,), (0.0,), ((1.0,),), lambdas=(2.0,))
    assert probe_positive_homogeneity(square, sample).max_deviation == 2.0
    with pytest.raises(ValueError):
        probe_positive_homogeneity(square, SampleSpec((0.0,), (0.0,), ((1.0,),), lambdas=(-1.0,)))


def test_additivity_probe_linear():
    rep = probe_additivity(linear(0.3))
    assert rep.max_deviation <= 1e-15
    assert all(v == 0.0 for v in rep.h.values())


def test_additivity_probe_abs():
    rep = probe_additivity(absolute(0.5), pairs=[((1.0,), (-1.0,))])
    assert rep.max_deviation == 1.0
    assert all(v == 1.0 for v in rep.h.values())


@pytest.mark.parametrize("k", [1.0, 0.5])
def test_additivity_probe_euclid(k):
    rep = probe_additivity(euclid(k), pairs=[((1.0, 0.0), (0.0, 1.0))])
    assert rep.max_deviation == pytest.approx(k * (2 - math.sqrt(2)), abs=1e-15)
    assert rep.h == {}


def test_step_linear_jump():
    g = step_linear(0.2, 0.4, 1.0)
    z = np.array([[1.0]])
    assert g(0.25, 0.0, z)[0] == 0.2
    assert g(0.5, 0.0, z)[0] == 0.4
    assert g(0.5 - 1e-13, 0.0, z)[0] == 0.4
    assert g.drift.integral()[0] == pytest.approx(0.3)
    assert check_hypotheses(g).passed
    times = default_sample(g).times
    assert any(t < 0.5 for t in times if t > 0.49) and 0.5 in times


def test_kink_rates():
    g = kink(0.5, 0.2)
    z = np.array([[1.0], [-1.0], [0.0]])
    assert g(0.0, 0.0, z).tolist() == [0.5, 0.2, 0.0]
    assert not g.is_linear
    assert kink(0.3, -0.3).is_linear


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        euclid(0.5)(0.0, 0.0, np.zeros((2, 1)))


def test_restriction_examples():
    r = 1 / math.sqrt(2)
    g = restrict_to_direction(linear((0.2, 0.4)), (r, r))
    z = np.linspace(-2, 2, 9)[:, None]
    assert np.allclose(g(0.3, 0.0, z), 0.6 * r * z[:, 0], atol=1e-15)
    assert g.drift.integral()[0] == pytest.approx(0.6 * r)
    ge = restrict_to_direction(euclid(0.5), (0.6, 0.8))
    assert np.allclose(ge(0.0, 0.0, z), 0.5 * np.abs(z[:, 0]), atol=1e-15)
    k1 = Generator(lambda t, y, z: 0.7 * np.abs(z[..., 0]), 0.7, 2, "abs-first")
    assert np.all(restrict_to_direction(k1, (0.0, 1.0))(0.0, 0.0, z) == 0.0)


def test_restriction_needs_unit_vector():
    with pytest.raises(ValueError):
        restrict_to_direction(euclid(0.5), (1.0, 1.0))
    with pytest.raises(ValueError):
        restrict_to_direction(euclid(0.5), (1.0,))


@given(st.floats(0, 2 * math.pi), st.floats(-5, 5))
@settings(max_examples=100, deadline=None)
def test_euclid_restriction_is_abs(theta, z):
    a = (math.cos(theta), math.sin(theta))
    norm = math.hypot(*a)
    a = (a[0] / norm, a[1] / norm)
    if abs(math.sqrt(a[0] ** 2 + a[1] ** 2) - 1) > 1e-12:
        return
    g = restrict_to_direction(euclid(0.5), a)
    assert g(0.0, 0.0, np.array([[z]]))[0] == pytest.approx(0.5 * abs(z), rel=1e-14, abs=1e-15)


@pytest.mark.parametrize(
    "spec, dim, label, lip",
    [
        ("zero", 1, "zero", 0.0),
        ("linear:0.3", 1, "linear:0.3", 0.3),
        ("linear2:0.3,0.4", 2, "linear2:0.3,0.4", 0.5),
        ("linear:0.3,0.4", 2, "linear2:0.3,0.4", 0.5),
        ("step-linear:0.2,0.4", 1, "step-linear:0.2,0.4", 0.4),
        ("abs:0.5", 1, "abs:0.5", 0.5),
        ("abs:0.5", 2, "abs:0.5", 0.5 * math.sqrt(2)),
        ("euclid:0.5", 2, "euclid:0.5", 0.5),
        ("kink:0.5,0.2", 1, "kink:0.5,0.2", 0.5),
        ("ycontrol:1", 1, "ycontrol:1", 1.0),
    ],
)
def test_parse_generator(spec, dim, label, lip):
    g = parse_generator(spec, dim)
    assert g.label == label and g.lipschitz == pytest.approx(lip) and g.dimension == dim


@pytest.mark.parametrize("spec, dim", [("linear:0.3,0.1", 1), ("linear:0.3", 2), ("linear2:1,2", 1), ("abs", 1), ("abs:x", 1), ("kink:1", 1), ("step-linear:1,2", 2), ("wat:1", 1), ("abs:inf", 1)])
def test_parse_generator_rejects(spec, dim):
    with pytest.raises(ValueError):
        parse_generator(spec, dim)


def test_zero_generator():
    g = zero(2)
    assert g.is_linear and g(0.0, 0.0, np.ones((3, 2))).tolist() == [0.0, 0.0, 0.0]
