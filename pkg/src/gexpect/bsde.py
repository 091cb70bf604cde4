"""Backward induction for ``y_t = xi + int_t^T g(s, y_s, z_s) ds - int_t^T z_s . dW_s``.

One step of the explicit scheme on layer ``i``::

    mean_i = E[y_{i+1} | node],   z_i = E[y_{i+1} dW] / dt
    y_i    = mean_i + g(t_i, mean_i, z_i) dt

Under ``K sqrt(dt) <= 1/2`` every successor enters ``y_i`` with a nonnegative
weight, so the scheme is monotone and ``A -> E_g[I_A]`` is a capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .claims import Claim, Event, indicator
from .generators import Generator
from .lattice import LatticeModel, layer_step

__all__ = [
    "GuardError",
    "BsdeSolution",
    "StabilityReport",
    "min_steps",
    "check_guard",
    "solve_bsde",
    "solve_values",
    "solve_paths",
    "g_expectation",
    "conditional_g_expectation",
    "g_probability",
    "comonotonic_additivity_gap",
    "stability_gap",
    "substitution_check",
]

MAX_PATH_LEAVES = 2**20


class GuardError(ValueError):
    """``K sqrt(dt) > 1/2``; ``min_steps`` is the smallest admissible N."""

    def __init__(self, message: str, min_steps: int):
        super().__init__(message)
        self.min_steps = min_steps


def min_steps(lipschitz: float, horizon: float) -> int:
    n = max(1, math.ceil(4.0 * lipschitz**2 * horizon))
    while lipschitz * math.sqrt(horizon / n) > 0.5:
        n += 1
    return n


def check_guard(model: LatticeModel, g: Generator) -> None:
    if g.dimension != model.dimension:
        raise ValueError(f"generator dimension {g.dimension} does not match lattice dimension {model.dimension}")
    if g.lipschitz * model.increment > 0.5:
        n = min_steps(g.lipschitz, model.horizon)
        raise GuardError(
            f"monotonicity guard K*sqrt(dt) <= 1/2 fails for {g.label} with N={model.steps}; "
            f"use at least N={n}",
            n,
        )


@dataclass(frozen=True, eq=False)
class BsdeSolution:
    model: LatticeModel
    generator: Generator
    y: tuple[np.ndarray, ...]
    z: tuple[np.ndarray, ...]
    claim: Claim | None = None
    terminal: str = "node"

    @property
    def y0(self) -> float:
        return float(self.y[0].reshape(-1)[0])

    @property
    def z0(self) -> np.ndarray:
        return self.z[0].reshape(-1, self.model.dimension)[0].copy()

    def conditional(self, i: int, node: Sequence[int] | int) -> float:
        return conditional_g_expectation(self, i, node)


def _as_terminal(model: LatticeModel, xi, terminal: str) -> tuple[np.ndarray, Claim | None]:
    if isinstance(xi, Claim):
        return xi.values(model, terminal), xi
    vals = np.array(xi, dtype=float)
    if vals.shape != model.node_shape(model.steps):
        raise ValueError(f"terminal values have shape {vals.shape}, lattice needs {model.node_shape(model.steps)}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("terminal values must be finite")
    return vals, None


def solve_values(model: LatticeModel, g: Generator, values: np.ndarray) -> BsdeSolution:
    """Solve for explicit terminal node values."""
    return solve_bsde(model, g, values)


def solve_bsde(model: LatticeModel, g: Generator, xi, terminal: str = "node") -> BsdeSolution:
    """Full y and z surfaces for claim ``xi`` (a Claim or terminal node values)."""
    check_guard(model, g)
    y, claim = _as_terminal(model, xi, terminal)
    n, s, dt, d = model.steps, model.increment, model.dt, model.dimension
    ys: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    zs: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    ys[n] = y
    for i in range(n - 1, -1, -1):
        mean, z = layer_step(y, s, d)
        y = mean + g(model.time(i), mean, z) * dt
        if not np.all(np.isfinite(y)):
            raise ValueError(f"non-finite value at time index {i} for {g.label}")
        ys[i], zs[i] = y, z
    bound = float(np.max(np.abs(ys[n]))) * math.exp(g.lipschitz * model.horizon)
    worst = max(float(np.max(np.abs(layer))) for layer in ys)
    if worst > bound * (1.0 + 1e-9) + 1e-300:
        raise ValueError(f"solution exceeds its a-priori bound ({worst} > {bound})")
    return BsdeSolution(model, g, tuple(ys), tuple(zs), claim, terminal)


def g_expectation(solution: BsdeSolution) -> float:
    return solution.y0


def conditional_g_expectation(solution: BsdeSolution, i: int, node: Sequence[int] | int) -> float:
    model = solution.model
    if not 0 <= i <= model.steps:
        raise IndexError(f"time index {i} outside 0..{model.steps}")
    node = tuple(int(j) for j in np.atleast_1d(node))
    if len(node) != model.dimension or any(j < 0 or j > i for j in node):
        raise IndexError(f"node {node} does not exist at time index {i}")
    return float(solution.y[i][node])


def g_probability(model: LatticeModel, g: Generator, event: Event, terminal: str = "node") -> float:
    return solve_bsde(model, g, indicator(event), terminal).y0


def comonotonic_additivity_gap(
    model: LatticeModel, g: Generator, xi, eta, terminal: str = "node"
) -> float:
    """``E_g[xi + eta] - E_g[xi] - E_g[eta]`` from three independent solves."""
    a, _ = _as_terminal(model, xi, terminal)
    b, _ = _as_terminal(model, eta, terminal)
    return solve_bsde(model, g, a + b).y0 - solve_bsde(model, g, a).y0 - solve_bsde(model, g, b).y0


# --- a-priori stability ---------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    sup_term: float
    z_term: float
    rhs: float
    ratio: float

    @property
    def lhs(self) -> float:
        return self.sup_term + self.z_term


def _forward(alive: np.ndarray, dimension: int) -> np.ndarray:
    """Push path mass one step forward; leading axis indexes thresholds."""
    out = alive
    for axis in range(1, dimension + 1):
        shape = list(out.shape)
        shape[axis] += 1
        nxt = np.zeros(shape)
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        nxt[tuple(lo)] += 0.5 * out
        nxt[tuple(hi)] += 0.5 * out
        out = nxt
    return out


def expected_path_sup(model: LatticeModel, layers: Sequence[np.ndarray], chunk: int = 4096) -> float:
    """``E[max_i X_i(node_i)]`` over lattice paths, exactly.

    The running maximum only takes values in the set of node values, so
    ``E[sup] = sum_k x_k (F(x_k) - F(x_{k-1}))`` with ``F(x) = P(sup <= x)``,
    and ``F`` is a killed forward propagation for each threshold.
    """
    xs = np.unique(np.concatenate([np.ravel(layer) for layer in layers]))
    d = model.dimension
    cdf = np.empty(xs.size)
    for start in range(0, xs.size, chunk):
        th = xs[start : start + chunk]
        expand = (slice(None),) + (None,) * d
        alive = (layers[0][None, ...] <= th[expand]).astype(float)
        for i in range(1, len(layers)):
            alive = _forward(alive, d) * (layers[i][None, ...] <= th[expand])
        cdf[start : start + chunk] = alive.reshape(th.size, -1).sum(axis=1)
    probs = np.diff(np.concatenate([[0.0], cdf]))
    return float(np.dot(xs, probs))


def stability_gap(model: LatticeModel, g: Generator, xi1, xi2, terminal: str = "node") -> StabilityReport:
    """Both sides of the a-priori estimate at ``t = 0``::

        E[sup_s |dy_s|^2] + E[sum_i |dz_i|^2 dt]   vs   E[|xi1 - xi2|^2]
    """
    s1 = solve_bsde(model, g, xi1, terminal)
    s2 = solve_bsde(model, g, xi2, terminal)
    dy2 = [(a - b) ** 2 for a, b in zip(s1.y, s2.y)]
    sup_term = expected_path_sup(model, dy2)
    z_term = 0.0
    for i, (a, b) in enumerate(zip(s1.z, s2.z)):
        z_term += float(np.sum(model.weights(i) * np.sum((a - b) ** 2, axis=-1))) * model.dt
    rhs = float(np.sum(model.terminal_weights() * dy2[-1]))
    lhs = sup_term + z_term
    if rhs == 0.0:
        ratio = 0.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / rhs
    return StabilityReport(sup_term, z_term, rhs, ratio)


# --- path tree and the substitution property ------------------------------


def solve_paths(
    model: LatticeModel,
    g: Generator,
    payoff: Callable[[np.ndarray], np.ndarray],
) -> list[np.ndarray]:
    """Brute-force solve on the non-recombining path tree.

    ``payoff`` receives every path as integer coordinates of shape
    ``(paths, steps + 1, d)`` (multiply by ``sqrt(dt)`` for W) and returns
    one terminal value per path. Returns y per level; level ``i`` has
    ``2**(d*i)`` entries ordered so that children of entry ``m`` are
    ``m*B .. m*B + B - 1`` with branch bits ``(W^1 up?, W^2 up?)``.
    """
    check_guard(model, g)
    n, d, s, dt = model.steps, model.dimension, model.increment, model.dt
    branches = 2**d
    if branches**n > MAX_PATH_LEAVES:
        raise ValueError(f"path tree with {branches**n} leaves is too large")
    # moves[b] = per-coordinate increment (+1/-1) of branch b
    moves = np.array([[1 if (b >> (d - 1 - k)) & 1 else -1 for k in range(d)] for b in range(branches)])
    idx = np.arange(branches**n)
    units = np.zeros((branches**n, n + 1, d), dtype=int)
    units[:, 0, :] = model.origin
    for level in range(1, n + 1):
        b = (idx // branches ** (n - level)) % branches
        units[:, level, :] = units[:, level - 1, :] + moves[b]
    y = np.asarray(payoff(units), dtype=float).reshape(-1)
    levels: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    levels[n] = y
    for i in range(n - 1, -1, -1):
        kids = y.reshape(-1, branches)
        if d == 1:
            nxt = np.stack([kids[:, 0], kids[:, 1]], axis=-1)
        else:
            # rebuild the [j1, j2] layout expected by layer_step
            nxt = np.stack([np.stack([kids[:, 0], kids[:, 1]], -1), np.stack([kids[:, 2], kids[:, 3]], -1)], -2)
        mean, z = _tree_step(nxt, s, d)
        y = mean + g(model.time(i), mean, z) * dt
        levels[i] = y
    return levels


def _tree_step(nxt: np.ndarray, s: float, d: int) -> tuple[np.ndarray, np.ndarray]:
    # each parent has its own 2 (or 2x2) successor block; reuse layer_step per block
    if d == 1:
        mean, z = layer_step(nxt.T, s, 1)
        return mean[0], z[0]
    blocks = np.moveaxis(nxt, 0, -1)
    mean, z = layer_step(blocks, s, 2)
    return mean[0, 0], z[0, 0]


def substitution_check(
    model: LatticeModel,
    g: Generator,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t0_index: int,
    xi: Callable[[np.ndarray], np.ndarray],
) -> float:
    """Largest gap between the two sides of the substitution property.

    ``xi`` maps the W value(s) at time index ``t0_index`` to ``x``; ``f(x, w)``
    maps ``x`` and terminal W to the claim value. The left side solves
    ``f(xi(W_{t0}), W_T)`` on the full path tree; the right side solves
    ``f(x, .)`` on the sub-lattice of each time-``t0`` node and substitutes
    ``x = xi(node)``.
    """
    if not 0 <= t0_index < model.steps:
        raise ValueError(f"t0 index must lie in 0..{model.steps - 1}")
    s, d = model.increment, model.dimension

    def payoff(units: np.ndarray) -> np.ndarray:
        x = np.asarray(xi(units[:, t0_index, :] * s), dtype=float)
        return f(x, units[:, -1, :] * s)

    tree = solve_paths(model, g, payoff)[t0_index]
    # lattice node of every tree entry at t0
    branches = 2**d
    count = branches**t0_index
    ups = np.zeros((count, d), dtype=int)
    idx = np.arange(count)
    for level in range(1, t0_index + 1):
        b = (idx // branches ** (t0_index - level)) % branches
        for k in range(d):
            ups[:, k] += (b >> (d - 1 - k)) & 1
    worst = 0.0
    w0 = model.w(t0_index)
    for node in np.ndindex(*model.node_shape(t0_index)):
        x = np.asarray(xi(w0[node][None, :]), dtype=float)[0]
        sub = model.sublattice(t0_index, node)
        vals = np.asarray(f(np.full(sub.node_shape(sub.steps), x), sub.terminal_w()), dtype=float)
        right = solve_bsde(sub, g, vals).y0
        mask = np.all(ups == np.array(node), axis=1)
        if np.any(mask):
            worst = max(worst, float(np.max(np.abs(tree[mask] - right))))
    return worst
