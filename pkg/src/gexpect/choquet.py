"""g-capacities and Choquet expectations of lattice claims.

The survival map ``v -> P_g(xi >= v)`` of a claim with distinct node values
``v_1 < ... < v_m`` is piecewise constant, so the Choquet integral is the
finite layered sum ``v_1 + sum_k (v_k - v_{k-1}) P_g(xi >= v_k)``.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .bsde import solve_bsde
from .claims import Claim, TableClaim, is_comonotonic
from .generators import Generator
from .lattice import LatticeModel

__all__ = [
    "MERGE_TOL",
    "CapacityCurve",
    "ChoquetResult",
    "PropertyReport",
    "distinct_levels",
    "capacity_curve",
    "choquet_expectation",
    "choquet_quadrature",
    "choquet_property_suite",
]

log = logging.getLogger(__name__)

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class CapacityCurve:
    levels: tuple[float, ...]
    capacities: tuple[float, ...]
    model: str
    generator: str
    claim: str

    def survival(self, t: float) -> float:
        """``V(xi >= t)`` for any real ``t``."""
        k = int(np.searchsorted(self.levels, t, side="left"))
        return 1.0 if k == 0 else (self.capacities[k] if k < len(self.levels) else 0.0)


@dataclass(frozen=True)
class ChoquetResult:
    value: float
    curve: CapacityCurve
    terms: tuple[float, ...]


def _node_values(model: LatticeModel, xi, terminal: str) -> tuple[np.ndarray, str]:
    if isinstance(xi, Claim):
        return xi.values(model, terminal), xi.label
    vals = np.array(xi, dtype=float)
    if vals.shape != model.node_shape(model.steps):
        raise ValueError("claim values do not match the lattice")
    return vals, "values"


def distinct_levels(values: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Sorted distinct values, merging runs closer than ``tol`` into their
    smallest member. Returns the levels and each node's level index."""
    flat = np.ravel(values)
    uniq = np.unique(flat)
    keep = np.concatenate([[True], np.diff(uniq) > tol])
    levels = uniq[keep]
    index = np.searchsorted(levels, flat, side="right") - 1
    return levels, index.reshape(np.shape(values))


def capacity_curve(
    model: LatticeModel,
    g: Generator,
    xi,
    terminal: str = "node",
    merge_tol: float = MERGE_TOL,
    workers: int = 1,
    budget: float = 5e7,
) -> CapacityCurve:
    """``P_g(xi >= v_k)`` for every distinct level ``v_k``: one solve per level."""
    vals, label = _node_values(model, xi, terminal)
    levels, index = distinct_levels(vals, merge_tol)
    cost = levels.size * model.node_count(model.steps) * model.steps
    if cost > budget:
        log.warning("capacity curve needs %d solves on N=%d (cost %.3g > budget %.3g)", levels.size, model.steps, cost, budget)

    def solve(k: int) -> float:
        return solve_bsde(model, g, (index >= k).astype(float)).y0

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            caps = list(pool.map(solve, range(levels.size)))
    else:
        caps = [solve(k) for k in range(levels.size)]
    if caps[0] != 1.0:
        raise ValueError(f"P_g(Omega) = {caps[0]!r} != 1; {g.label} is not normalised (g(t, y, 0) != 0?)")
    for k in range(1, len(caps)):
        if caps[k] > caps[k - 1] + 1e-12 or caps[k] < -1e-12:
            raise ValueError(f"capacity curve is not monotone at level {levels[k]!r}: {caps[k - 1]!r} -> {caps[k]!r}")
    desc = f"d={model.dimension},T={model.horizon:g},N={model.steps}"
    return CapacityCurve(tuple(levels.tolist()), tuple(caps), desc, g.label, label)


def choquet_expectation(
    model: LatticeModel, g: Generator, xi, terminal: str = "node", **kwargs
) -> ChoquetResult:
    curve = capacity_curve(model, g, xi, terminal, **kwargs)
    v, cap = curve.levels, curve.capacities
    terms = (v[0],) + tuple((v[k] - v[k - 1]) * cap[k] for k in range(1, len(v)))
    return ChoquetResult(math.fsum(terms), curve, terms)


def choquet_quadrature(curve: CapacityCurve) -> float:
    """The defining two-sided integral evaluated by adaptive quadrature,
    as an independent check on the layered sum."""
    lo, hi = curve.levels[0], curve.levels[-1]
    pts = list(curve.levels)
    neg = 0.0
    if lo < 0:
        neg = integrate.quad(lambda t: curve.survival(t) - 1.0, min(lo, 0.0) - 1.0, 0.0,
                             points=[p for p in pts if p < 0] or None, limit=500, epsabs=1e-13)[0]
    pos = 0.0
    if hi > 0:
        pos = integrate.quad(curve.survival, 0.0, hi + 1.0,
                             points=[p for p in pts if p > 0] or None, limit=500, epsabs=1e-13)[0]
    return neg + pos


@dataclass(frozen=True)
class PropertyReport:
    monotonicity: float
    homogeneity: float
    translation: float
    comonotonic_additivity: float
    indicator_mismatch: float
    checks: dict

    def passed(self, tol: float = 1e-10) -> bool:
        return max(self.monotonicity, self.homogeneity, self.translation, self.comonotonic_additivity) <= tol


def choquet_property_suite(
    model: LatticeModel,
    g: Generator,
    claims: Sequence,
    comonotone_pairs: Sequence[tuple] = (),
    lambdas: Sequence[float] = (0.0, 0.5, 2.0, 3.0),
    shifts: Sequence[float] = (-2.0, 3.0, 5.0),
    terminal: str = "node",
) -> PropertyReport:
    """Largest violation of monotonicity, positive homogeneity, translation
    invariance and comonotonic additivity over a claim family.

    Ordered pairs are ``min(a, b) <= max(a, b)`` for every pair in ``claims``;
    comonotone pairs are certified with ``is_comonotonic`` before use.
    """
    vals = [_node_values(model, c, terminal)[0] for c in claims]
    cache: dict[bytes, float] = {}

    def C(v: np.ndarray) -> float:
        key = v.tobytes()
        if key not in cache:
            cache[key] = choquet_expectation(model, g, v).value
        return cache[key]

    mono = homo = trans = como = 0.0
    for a, b in itertools.combinations(vals, 2):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        mono = max(mono, C(lo) - C(hi))
    for v in vals:
        base = C(v)
        for lam in lambdas:
            if lam < 0:
                raise ValueError("homogeneity is checked for lam >= 0")
            homo = max(homo, abs(C(lam * v) - lam * base))
        for c in shifts:
            trans = max(trans, abs(C(v + c) - (base + c)))
    for x, y in comonotone_pairs:
        xv, yv = _node_values(model, x, terminal)[0], _node_values(model, y, terminal)[0]
        if not is_comonotonic(model, TableClaim(xv), TableClaim(yv)):
            raise ValueError("pair is not comonotone on this lattice")
        como = max(como, abs(C(xv + yv) - C(xv) - C(yv)))
    mismatch = 0.0
    for v in vals:
        if np.all((v == 0.0) | (v == 1.0)):
            mismatch = max(mismatch, abs(C(v) - solve_bsde(model, g, v).y0))
    checks = {"claims": len(vals), "pairs": len(comonotone_pairs), "lambdas": list(lambdas), "shifts": list(shifts)}
    return PropertyReport(max(mono, 0.0), homo, trans, como, mismatch, checks)
