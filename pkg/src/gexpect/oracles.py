"""Closed-form reference values.

For a driver linear in ``z`` the g-expectation is an ordinary expectation
under a drift-shifted Brownian motion, so claims built from band indicators
and linear forms have normal-CDF closed forms. Everything else falls back to
Gauss-Hermite quadrature with order doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .claims import Band, Claim, Combination, Constant, FunctionClaim, LinearForm, _pad

__all__ = [
    "DriftSpec",
    "normal_cdf",
    "gaussian_expectation",
    "linear_girsanov_expectation",
    "drift_shift_monotone_expectation",
    "monotone_direction",
    "closed_form_z",
]

QUAD_TOL = 1e-10
_HERMITE_ORDERS = (20, 40, 80, 160, 320)


def normal_cdf(x):
    """Standard normal CDF via Cephes ``ndtr`` (absolute error below 1e-15)."""
    return ndtr(x)


@dataclass(frozen=True)
class DriftSpec:
    """Piecewise-constant drift ``b(t)``: ``values[j]`` holds on
    ``[knots[j], knots[j+1])`` and the last row also beyond the final knot."""

    knots: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        knots = tuple(float(k) for k in self.knots)
        values = tuple(tuple(float(v) for v in np.atleast_1d(row)) for row in self.values)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if len(knots) != len(values) + 1 or not values:
            raise ValueError("need one value row per interval between knots")
        if knots[0] != 0.0 or any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("knots must start at 0 and increase strictly")
        if len({len(v) for v in values}) != 1:
            raise ValueError("every drift row must have the same dimension")
        if not all(math.isfinite(v) for row in values for v in row):
            raise ValueError("drift values must be finite")

    @classmethod
    def constant(cls, b: float | Sequence[float], horizon: float) -> DriftSpec:
        return cls((0.0, float(horizon)), (tuple(np.atleast_1d(b)),))

    @property
    def dimension(self) -> int:
        return len(self.values[0])

    @property
    def horizon(self) -> float:
        return self.knots[-1]

    def at(self, t: float) -> np.ndarray:
        j = int(np.searchsorted(self.knots, t, side="right")) - 1
        return np.array(self.values[min(max(j, 0), len(self.values) - 1)])

    def integral(self, t: float = 0.0, T: float | None = None) -> np.ndarray:
        """``int_t^T b(s) ds`` per component."""
        T = self.horizon if T is None else T
        total = np.zeros(self.dimension)
        last = len(self.values) - 1
        for j, (a, b, row) in enumerate(zip(self.knots, self.knots[1:], self.values)):
            # the final piece extends past the last knot
            lo, hi = max(a, t), (T if j == last else min(b, T))
            if hi > lo:
                total += (hi - lo) * np.array(row)
        return total

    def dot(self, a: Sequence[float]) -> DriftSpec:
        a = np.asarray(a, dtype=float)
        return DriftSpec(self.knots, tuple((float(np.dot(row, a)),) for row in self.values))

    def negated(self) -> DriftSpec:
        return DriftSpec(self.knots, tuple(tuple(-v for v in row) for row in self.values))


def gaussian_expectation(f: Claim, mean: Sequence[float], variance: float) -> float:
    """``E[f(X)]`` for ``X ~ N(mean, variance * I)``."""
    mean = np.asarray(mean, dtype=float)
    exact = _analytic(f, mean, variance)
    if exact is not None:
        return exact
    if not f.bounded:
        raise ValueError(f"claim {f.label!r} is unbounded and has no closed form")
    if not isinstance(f, FunctionClaim):
        raise ValueError(f"claim {f.label!r} cannot be evaluated off its lattice")
    return _hermite(f, mean, variance)


def _analytic(f: Claim, mean: np.ndarray, variance: float) -> float | None:
    d = mean.size
    if isinstance(f, Constant):
        return f.value
    if isinstance(f, LinearForm):
        return float(np.dot(_pad(f.coeffs, d), mean))
    if isinstance(f, Band):
        a = _pad(f.coeffs, d)
        m = float(np.dot(a, mean))
        sd = math.sqrt(float(np.dot(a, a)) * variance)
        if sd == 0.0:
            return float(f.lo <= m <= f.hi)
        return float(normal_cdf((f.hi - m) / sd) - normal_cdf((f.lo - m) / sd))
    if isinstance(f, Combination):
        parts = [_analytic(cl, mean, variance) for _, cl in f.terms]
        if any(p is None for p in parts):
            return None
        return math.fsum(c * p for (c, _), p in zip(f.terms, parts))
    return None


def _hermite(f: Claim, mean: np.ndarray, variance: float) -> float:
    d = mean.size
    scale = math.sqrt(2.0 * variance)
    prev = None
    for order in _HERMITE_ORDERS:
        x, wts = np.polynomial.hermite.hermgauss(order)
        grids = np.meshgrid(*([x] * d), indexing="ij")
        wgrid = np.ones_like(grids[0])
        for g in np.meshgrid(*([wts] * d), indexing="ij"):
            wgrid = wgrid * g
        pts = np.stack(grids, axis=-1) * scale + mean
        val = float(np.sum(wgrid * f.evaluate(pts)) / math.pi ** (d / 2))
        if prev is not None and abs(val - prev) <= QUAD_TOL:
            return val
        prev = val
    raise ValueError(f"Gauss-Hermite quadrature for {f.label!r} did not reach {QUAD_TOL:g}")


def linear_girsanov_expectation(b: DriftSpec, f: Claim, T: float | None = None) -> float:
    """``E[f(W_T + int_0^T b ds)]`` with ``W_T ~ N(0, T I)``."""
    T = b.horizon if T is None else float(T)
    return gaussian_expectation(f, b.integral(0.0, T), T)


def _check_monotone(f: Claim, direction: str, T: float) -> None:
    x = np.linspace(-12.0, 12.0, 4801) * math.sqrt(T)
    vals = f.evaluate(x[:, None])
    diffs = np.diff(vals)
    ok = np.all(diffs >= -1e-12) if direction == "increasing" else np.all(diffs <= 1e-12)
    if not ok:
        raise ValueError(f"claim {f.label!r} is not {direction}")


def monotone_direction(f: Claim, T: float = 1.0) -> str | None:
    """``"increasing"``, ``"decreasing"`` or None for a 1-D claim."""
    for direction in ("increasing", "decreasing"):
        try:
            _check_monotone(f, direction, T)
        except ValueError:
            continue
        return direction
    return None


def drift_shift_monotone_expectation(
    k: float, f: Claim, direction: str, T: float, k_down: float | None = None
) -> float:
    """g-expectation of a monotone 1-D claim under ``g = k|z|``.

    Monotone terminal data gives ``z`` a constant sign, so the driver acts as
    the constant drift ``g(t, 1) = k`` (increasing data) or ``-g(t, -1)``
    (decreasing data). ``k_down`` sets ``g(t, -1)`` for the kinked form
    ``k z^+ + k_down z^-``.
    """
    if direction not in ("increasing", "decreasing"):
        raise ValueError("direction must be 'increasing' or 'decreasing'")
    if k < 0:
        raise ValueError("k must be nonnegative")
    _check_monotone(f, direction, T)
    k_down = k if k_down is None else k_down
    rate = k if direction == "increasing" else -k_down
    return linear_girsanov_expectation(DriftSpec.constant(rate, T), f, T)


def _density_factor(x: float, tau: float) -> float:
    return math.exp(-(x**2) / (2.0 * tau)) / math.sqrt(2.0 * math.pi * tau)


def closed_form_z(
    kind: str,
    t: float,
    w: float | Sequence[float],
    T: float,
    drift_integral: float,
    n: float = 1.0,
):
    """Closed-form ``z`` processes for the indicator claims of the 1-D and
    2-D dichotomy arguments.

    ``ztilde``  z of ``I[W_T >= -n]`` under drift ``g(s, 1)``;
    ``zbar``    z of ``I[W_T <= 0]`` under drift ``g(s, -1)`` (negative);
    ``e9``      z of ``I[W^1_T >= n]`` under ``g(s, 1, 0)``, second entry 0;
    ``e12``     z of ``I[W^2_T >= 0]`` under ``g(s, 0, 1)``, first entry 0.
    ``drift_integral`` is the matching ``int_t^T`` of the drift.
    """
    tau = T - t
    if not tau > 0:
        raise ValueError("the formulas need t < T")
    if kind == "ztilde":
        return _density_factor(n + float(w) + drift_integral, tau)
    if kind == "zbar":
        return -_density_factor(float(w) - drift_integral, tau)
    if kind == "e9":
        w1 = float(np.atleast_1d(w)[0])
        return (_density_factor(n - w1 - drift_integral, tau), 0.0)
    if kind == "e12":
        w2 = float(np.atleast_1d(w)[-1])
        return (0.0, _density_factor(w2 + drift_integral, tau))
    raise ValueError(f"unknown formula {kind!r}")
