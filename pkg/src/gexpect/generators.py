"""Drivers ``g(t, y, z)`` for the backward equation, hypothesis checks and
structural probes.

Every generator evaluates vectorised: ``y`` has the node shape and ``z`` the
node shape plus a trailing axis of length ``dimension``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .oracles import DriftSpec

__all__ = [
    "Generator",
    "HypothesisReport",
    "ProbeReport",
    "AdditivityReport",
    "SampleSpec",
    "zero",
    "linear",
    "step_linear",
    "absolute",
    "euclid",
    "kink",
    "y_control",
    "parse_generator",
    "default_sample",
    "check_hypotheses",
    "probe_positive_homogeneity",
    "probe_additivity",
    "restrict_to_direction",
]


@dataclass(frozen=True, eq=False)
class Generator:
    fn: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    dimension: int
    label: str
    y_independent: bool = True
    positively_homogeneous: bool = True
    # set for drivers of the form b(t) . z (the Girsanov family)
    drift: DriftSpec | None = None
    # jump times of the t-dependence, probed on both sides
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.lipschitz < 0 or not math.isfinite(self.lipschitz):
            raise ValueError("Lipschitz constant must be finite and nonnegative")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    @property
    def is_linear(self) -> bool:
        return self.drift is not None

    def __call__(self, t: float, y, z) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dimension:
            raise ValueError(f"z has {z.shape[-1]} components, generator expects {self.dimension}")
        return np.asarray(self.fn(float(t), y, z), dtype=float)


def _dot(z: np.ndarray, b: Sequence[float]) -> np.ndarray:
    out = z[..., 0] * b[0]
    for k in range(1, len(b)):
        out = out + z[..., k] * b[k]
    return out


def zero(dimension: int = 1) -> Generator:
    return Generator(
        lambda t, y, z: np.zeros(z.shape[:-1]),
        0.0,
        dimension,
        "zero",
        drift=DriftSpec.constant([0.0] * dimension, 1.0),
    )


def linear(b: float | Sequence[float], dimension: int | None = None, horizon: float = 1.0) -> Generator:
    """``g(t, z) = b . z``."""
    b = tuple(float(v) for v in np.atleast_1d(b))
    dimension = len(b) if dimension is None else dimension
    if len(b) != dimension:
        raise ValueError(f"linear driver needs {dimension} coefficients, got {len(b)}")
    head = "linear" if dimension == 1 else "linear2"
    label = f"{head}:{','.join(f'{v:g}' for v in b)}"
    return Generator(
        lambda t, y, z: _dot(z, b),
        float(np.linalg.norm(b)),
        dimension,
        label,
        drift=DriftSpec.constant(b, horizon),
    )


def step_linear(b_before: float, b_after: float, horizon: float = 1.0) -> Generator:
    """1-D linear driver whose coefficient jumps at ``horizon / 2``.

    The jump sits on a grid point for even step counts; times within
    ``1e-12 * horizon`` of it already use ``b_after``.
    """
    jump = 0.5 * horizon
    cut = jump - 1e-12 * horizon
    b0, b1 = float(b_before), float(b_after)

    def fn(t, y, z):
        return z[..., 0] * (b0 if t < cut else b1)

    return Generator(
        fn,
        max(abs(b0), abs(b1)),
        1,
        f"step-linear:{b0:g},{b1:g}",
        drift=DriftSpec((0.0, jump, float(horizon)), ((b0,), (b1,))),
        breakpoints=(jump,),
    )


def absolute(k: float, dimension: int = 1) -> Generator:
    """``g(z) = k * sum_i |z_i|``."""
    k = float(k)
    return Generator(
        lambda t, y, z: k * np.sum(np.abs(z), axis=-1),
        abs(k) * math.sqrt(dimension),
        dimension,
        f"abs:{k:g}",
    )


def euclid(k: float, dimension: int = 2) -> Generator:
    """``g(z) = k * |z|`` (Euclidean norm)."""
    k = float(k)
    return Generator(
        lambda t, y, z: k * np.sqrt(np.sum(z * z, axis=-1)),
        abs(k),
        dimension,
        f"euclid:{k:g}",
    )


def kink(up: float, down: float) -> Generator:
    """``g(z) = up * z^+ + down * z^-`` so that ``g(1) = up`` and ``g(-1) = down``."""
    up, down = float(up), float(down)
    drift = DriftSpec.constant(up, 1.0) if up + down == 0.0 else None

    def fn(t, y, z):
        z = z[..., 0]
        return up * np.maximum(z, 0.0) + down * np.maximum(-z, 0.0)

    return Generator(fn, max(abs(up), abs(down)), 1, f"kink:{up:g},{down:g}", drift=drift)


def y_control(c: float, dimension: int = 1) -> Generator:
    """``g(t, y, z) = c * y``: breaks g(t, y, 0) = 0, for negative tests."""
    c = float(c)
    return Generator(
        lambda t, y, z: c * np.broadcast_to(y, z.shape[:-1]),
        abs(c),
        dimension,
        f"ycontrol:{c:g}",
        y_independent=False,
        positively_homogeneous=False,
    )


def _numbers(text: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")] if text else []
    except ValueError:
        raise ValueError(f"bad numeric arguments {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValueError(f"expected {count} numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("generator parameters must be finite")
    return vals


def parse_generator(spec: str, dimension: int = 1, horizon: float = 1.0) -> Generator:
    """Build a generator from ``name:args`` (``linear:0.3``, ``abs:0.5``, ...)."""
    name, _, args = spec.strip().partition(":")
    if name == "zero":
        return zero(dimension)
    if name == "linear":
        return linear(_numbers(args, dimension), dimension, horizon)
    if name == "linear2":
        if dimension != 2:
            raise ValueError("linear2 needs --dim 2")
        return linear(_numbers(args, 2), 2, horizon)
    if name == "step-linear":
        if dimension != 1:
            raise ValueError("step-linear is one-dimensional")
        return step_linear(*_numbers(args, 2), horizon=horizon)
    if name == "abs":
        return absolute(_numbers(args, 1)[0], dimension)
    if name == "euclid":
        return euclid(_numbers(args, 1)[0], dimension)
    if name == "kink":
        if dimension != 1:
            raise ValueError("kink is one-dimensional")
        return kink(*_numbers(args, 2))
    if name == "ycontrol":
        return y_control(_numbers(args, 1)[0], dimension)
    raise ValueError(f"unknown generator {spec!r}")


# --- hypothesis checks and probes -----------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    times: tuple[float, ...]
    ys: tuple[float, ...]
    zs: tuple[tuple[float, ...], ...]
    lambdas: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 3.0)
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if not self.times or not self.ys or not self.zs:
            raise ValueError("sample spec must be non-empty")

    def describe(self) -> str:
        return f"{len(self.times)} times x {len(self.ys)} y x {len(self.zs)} z"


def default_sample(g: Generator, horizon: float = 1.0) -> SampleSpec:
    """Five times on ``[0, T)`` plus both sides of every breakpoint; y on
    ``{-2..2}``; z on a 9-point axis grid (product grid for d=2)."""
    times = set(np.linspace(0.0, horizon, 5, endpoint=False).tolist())
    for b in g.breakpoints:
        times.update({b - 1e-6 * horizon, b, b + 1e-6 * horizon})
    axis = (-2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0)
    zs = tuple(itertools.product(axis, repeat=g.dimension))
    return SampleSpec(tuple(sorted(times)), (-2.0, -1.0, 0.0, 1.0, 2.0), zs)


@dataclass(frozen=True)
class HypothesisReport:
    h3_max_violation: float
    lipschitz_estimate: float
    declared_lipschitz: float
    sample: str
    passed: bool


def _eval(g: Generator, t: float, y, z) -> np.ndarray:
    out = g(t, y, z)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"generator {g.label} returned a non-finite value at t={t}")
    return out


def check_hypotheses(g: Generator, sample: SampleSpec | None = None) -> HypothesisReport:
    sample = sample or default_sample(g)
    zs = np.array(sample.zs, dtype=float).reshape(-1, g.dimension)
    ys = np.array(sample.ys, dtype=float)
    yy = np.repeat(ys, len(zs))
    zz = np.tile(zs, (len(ys), 1))
    h3 = 0.0
    lip = 0.0
    for t in sample.times:
        h3 = max(h3, float(np.max(np.abs(_eval(g, t, ys, np.zeros((len(ys), g.dimension)))))))
        vals = _eval(g, t, yy, zz)
        dist = np.abs(yy[:, None] - yy[None, :]) + np.linalg.norm(zz[:, None, :] - zz[None, :, :], axis=-1)
        dg = np.abs(vals[:, None] - vals[None, :])
        mask = dist > 0
        if np.any(mask):
            lip = max(lip, float(np.max(dg[mask] / dist[mask])))
    tol = sample.tolerance
    passed = h3 <= tol and lip <= g.lipschitz * (1.0 + tol) + tol
    return HypothesisReport(h3, lip, g.lipschitz, sample.describe(), passed)


@dataclass(frozen=True)
class ProbeReport:
    max_deviation: float
    worst: dict


def probe_positive_homogeneity(g: Generator, sample: SampleSpec | None = None) -> ProbeReport:
    """Largest ``|g(t, y, lam z) - lam g(t, y, z)|`` over sampled ``lam >= 0``."""
    sample = sample or default_sample(g)
    if any(lam < 0 for lam in sample.lambdas):
        raise ValueError("positive homogeneity is probed for lam >= 0 only")
    zs = np.array(sample.zs, dtype=float).reshape(-1, g.dimension)
    worst = {"deviation": 0.0}
    for t in sample.times:
        for y in sample.ys:
            yv = np.full(len(zs), y)
            base = _eval(g, t, yv, zs)
            for lam in sample.lambdas:
                dev = np.abs(_eval(g, t, yv, lam * zs) - lam * base)
                k = int(np.argmax(dev))
                if dev[k] > worst["deviation"]:
                    worst = {"deviation": float(dev[k]), "t": t, "y": y, "z": zs[k].tolist(), "lam": lam}
    return ProbeReport(worst["deviation"], worst)


@dataclass(frozen=True)
class AdditivityReport:
    max_deviation: float
    worst: dict
    h: dict = field(default_factory=dict)


def probe_additivity(
    g: Generator,
    pairs: Sequence[tuple[Sequence[float], Sequence[float]]] | None = None,
    sample: SampleSpec | None = None,
    y: float = 0.0,
) -> AdditivityReport:
    """Largest ``|g(t, z + z') - g(t, z) - g(t, z')|`` over the given pairs
    (all pairs of sampled z when none are given). For d=1 also reports
    ``h(t) = g(t, 1) + g(t, -1)``, which vanishes exactly for linear drivers."""
    sample = sample or default_sample(g)
    if pairs is None:
        zs = [tuple(z) for z in sample.zs]
        pairs = list(itertools.product(zs, zs))
    a = np.array([p[0] for p in pairs], dtype=float).reshape(-1, g.dimension)
    b = np.array([p[1] for p in pairs], dtype=float).reshape(-1, g.dimension)
    yv = np.full(len(a), float(y))
    worst = {"deviation": 0.0}
    for t in sample.times:
        dev = np.abs(_eval(g, t, yv, a + b) - _eval(g, t, yv, a) - _eval(g, t, yv, b))
        k = int(np.argmax(dev))
        if "t" not in worst or dev[k] > worst["deviation"]:
            worst = {"deviation": float(dev[k]), "t": t, "pair": (a[k].tolist(), b[k].tolist())}
    h = {}
    if g.dimension == 1:
        for t in sample.times:
            pm = _eval(g, t, np.zeros(2), np.array([[1.0], [-1.0]]))
            h[t] = float(pm[0] + pm[1])
    return AdditivityReport(worst["deviation"], worst, h)


def restrict_to_direction(g: Generator, a: Sequence[float]) -> Generator:
    """The 1-D driver ``(t, y, z) -> g(t, y, a z)`` for a unit vector ``a``."""
    a = tuple(float(v) for v in np.atleast_1d(a))
    if len(a) != g.dimension:
        raise ValueError(f"direction has {len(a)} entries, generator dimension is {g.dimension}")
    norm = math.sqrt(math.fsum(v * v for v in a))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector (|a| = {norm!r})")
    fn = g.fn
    avec = np.array(a)

    def restricted(t, y, z):
        return fn(t, y, z[..., 0:1] * avec)

    drift = g.drift.dot(a) if g.drift is not None else None
    return Generator(
        restricted,
        g.lipschitz,
        1,
        f"{g.label}|a=({','.join(f'{v:.6g}' for v in a)})",
        g.y_independent,
        g.positively_homogeneous,
        drift,
        g.breakpoints,
    )
