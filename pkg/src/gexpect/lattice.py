"""Recombining binomial lattices for 1-D and 2-D Brownian motion.

Nodes are addressed by integer up-move counts. At time index ``i`` the
``k``-th coordinate of ``W`` sits at ``(origin_k + 2 j_k - i) * sqrt(dt)``,
so node identity never depends on floating-point matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "TimeGrid",
    "LatticeModel",
    "build_lattice",
    "one_step_expectation",
    "layer_step",
]


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int
    dt: float

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> TimeGrid:
        return cls(horizon=float(horizon), steps=int(steps), dt=float(horizon) / int(steps))

    def __post_init__(self) -> None:
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if not math.isfinite(self.horizon) or self.horizon <= 0.0:
            raise ValueError(f"horizon must be finite and positive, got {self.horizon!r}")
        if not math.isfinite(self.dt) or self.dt <= 0.0:
            raise ValueError(f"dt must be finite and positive, got {self.dt!r}")
        if abs(self.dt * self.steps - self.horizon) > 4 * math.ulp(self.horizon):
            raise ValueError("dt * steps does not match horizon")


@dataclass(frozen=True)
class LatticeModel:
    """Discrete sample space for a ``dimension``-dimensional Brownian motion.

    ``time_offset`` and ``origin`` let a sub-lattice rooted at an interior
    node reuse the parent's ``dt`` and integer coordinates bit for bit.
    """

    grid: TimeGrid
    dimension: int
    time_offset: int = 0
    origin: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension!r}")
        if not self.origin:
            object.__setattr__(self, "origin", (0,) * self.dimension)
        if len(self.origin) != self.dimension:
            raise ValueError("origin must have one integer per dimension")

    @property
    def steps(self) -> int:
        return self.grid.steps

    @property
    def dt(self) -> float:
        return self.grid.dt

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    @property
    def increment(self) -> float:
        return math.sqrt(self.grid.dt)

    @property
    def branches(self) -> int:
        return 2**self.dimension

    def time(self, i: int) -> float:
        return (self.time_offset + i) * self.grid.dt

    def node_shape(self, i: int) -> tuple[int, ...]:
        self._check_index(i)
        return (i + 1,) * self.dimension

    def node_count(self, i: int) -> int:
        return (i + 1) ** self.dimension

    def units(self, i: int) -> np.ndarray:
        """Integer coordinates ``origin + 2j - i``; shape ``node_shape(i) + (d,)``."""
        self._check_index(i)
        axes = [o + 2 * np.arange(i + 1) - i for o in self.origin]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids, axis=-1)

    def w(self, i: int) -> np.ndarray:
        """Brownian values at time index ``i``; shape ``node_shape(i) + (d,)``."""
        return self.units(i) * self.increment

    def terminal_w(self) -> np.ndarray:
        return self.w(self.steps)

    def weights(self, i: int) -> np.ndarray:
        """Path probabilities of the nodes at time index ``i`` (sum to 1)."""
        self._check_index(i)
        one = np.array([math.comb(i, j) / 2**i for j in range(i + 1)])
        if self.dimension == 1:
            return one
        return np.multiply.outer(one, one)

    def terminal_weights(self) -> np.ndarray:
        return self.weights(self.steps)

    def transition_weights(self) -> np.ndarray:
        return np.full(self.branches, 1.0 / self.branches)

    def sublattice(self, i: int, node: Sequence[int]) -> LatticeModel:
        """Lattice of the descendants of ``(i, node)``, sharing ``dt``."""
        self._check_index(i)
        node = tuple(int(j) for j in np.atleast_1d(node))
        if len(node) != self.dimension or any(j < 0 or j > i for j in node):
            raise IndexError(f"node {node} does not exist at time index {i}")
        if i >= self.steps:
            raise IndexError("cannot root a sub-lattice at the terminal layer")
        k = self.steps - i
        grid = TimeGrid(horizon=self.grid.dt * k, steps=k, dt=self.grid.dt)
        origin = tuple(o + 2 * j - i for o, j in zip(self.origin, node))
        return LatticeModel(grid, self.dimension, self.time_offset + i, origin)

    def _check_index(self, i: int) -> None:
        if not 0 <= i <= self.steps:
            raise IndexError(f"time index {i} outside 0..{self.steps}")


def build_lattice(dimension: int, horizon: float, steps: int) -> LatticeModel:
    if dimension not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {dimension!r}")
    if isinstance(steps, bool) or int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    horizon = float(horizon)
    if not math.isfinite(horizon) or horizon <= 0.0:
        raise ValueError(f"horizon must be finite and positive, got {horizon!r}")
    return LatticeModel(TimeGrid.uniform(horizon, int(steps)), dimension)


def layer_step(nxt: np.ndarray, s: float, dimension: int) -> tuple[np.ndarray, np.ndarray]:
    """Conditional mean and martingale-increment estimate for a whole layer.

    ``nxt`` holds the values at time index ``i + 1``. Returns the mean with
    the layer-``i`` node shape and ``z`` with a trailing axis of length d.
    Both solvers route through here so their arithmetic is identical.
    """
    if dimension == 1:
        up, dn = nxt[1:], nxt[:-1]
        mean = 0.5 * (up + dn)
        z = ((up - dn) / (2.0 * s))[..., None]
        return mean, z
    uu, ud = nxt[1:, 1:], nxt[1:, :-1]
    du, dd = nxt[:-1, 1:], nxt[:-1, :-1]
    mean = 0.25 * ((uu + ud) + (du + dd))
    z1 = ((uu + ud) - (du + dd)) / (4.0 * s)
    z2 = ((uu + du) - (ud + dd)) / (4.0 * s)
    return mean, np.stack([z1, z2], axis=-1)


def one_step_expectation(
    model: LatticeModel, i: int, node: Sequence[int] | int, successors: Sequence[float]
) -> tuple[float, np.ndarray]:
    """Mean and ``z`` estimate at a single node.

    Successor order is ``(up, down)`` for d=1 and ``(uu, ud, du, dd)`` for
    d=2, the first letter being the move of ``W^1``.
    """
    if not 0 <= i < model.steps:
        raise IndexError(f"time index {i} must satisfy 0 <= i < {model.steps}")
    node = tuple(int(j) for j in np.atleast_1d(node))
    if len(node) != model.dimension or any(j < 0 or j > i for j in node):
        raise IndexError(f"node {node} does not exist at time index {i}")
    vals = np.asarray(successors, dtype=float).ravel()
    if vals.size != model.branches:
        raise ValueError(f"expected {model.branches} successor values, got {vals.size}")
    if model.dimension == 1:
        nxt = np.array([vals[1], vals[0]])
    else:
        uu, ud, du, dd = vals
        nxt = np.array([[dd, du], [ud, uu]])
    mean, z = layer_step(nxt, model.increment, model.dimension)
    return float(mean.ravel()[0]), z.reshape(-1, model.dimension)[0].copy()
