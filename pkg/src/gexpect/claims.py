"""Terminal claims, events and comonotonicity on a lattice.

A claim is a function of the terminal Brownian state. It is turned into a
vector of node values in one of two ways:

``"node"``
    point evaluation at each terminal node (indicator values are exactly 0/1);
``"cell"``
    average over the node's cell ``[w - sqrt(dt), w + sqrt(dt)]^d``. Band
    indicators and affine claims average in closed form. This restores
    first-order convergence for discontinuous claims, which point
    evaluation on a binomial lattice only achieves at rate ``N^{-1/2}``.

Thresholds are non-strict (``>=`` / ``<=``) everywhere. A lattice point that
equals a threshold in exact arithmetic is kept inside the event even when its
floating-point W value misses by rounding (``SNAP`` absolute slack).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import LatticeModel

__all__ = [
    "SNAP",
    "TERMINAL_MODES",
    "Claim",
    "Constant",
    "LinearForm",
    "Band",
    "Combination",
    "FunctionClaim",
    "TableClaim",
    "Event",
    "indicator",
    "combine",
    "coord",
    "is_comonotonic",
    "band_witness",
    "cross_witness",
    "parse_claim",
]

SNAP = 1e-12
TERMINAL_MODES = ("node", "cell")
_CELL_POINTS = 16


def _check_mode(terminal: str) -> None:
    if terminal not in TERMINAL_MODES:
        raise ValueError(f"terminal must be one of {TERMINAL_MODES}, got {terminal!r}")


def _pad(coeffs: Sequence[float], d: int) -> np.ndarray:
    a = np.zeros(max(d, len(coeffs)))
    a[: len(coeffs)] = coeffs
    if np.any(a[d:] != 0.0):
        raise ValueError(f"claim uses coordinate beyond dimension {d}")
    return a[:d]


def _fmt(x: float) -> str:
    return f"{x:g}"


def _form_label(coeffs: Sequence[float]) -> str:
    parts = []
    for k, c in enumerate(coeffs, start=1):
        if c == 0.0:
            continue
        if c == 1.0:
            parts.append(f"+w{k}")
        elif c == -1.0:
            parts.append(f"-w{k}")
        else:
            parts.append(f"{c:+g}*w{k}")
    text = "".join(parts) or "0"
    return text[1:] if text.startswith("+") else text


class Claim:
    """Base class. Subclasses implement ``evaluate`` and ``cell_average``."""

    label: str
    bounded: bool = True

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cell_average(self, w: np.ndarray, s: float) -> np.ndarray:
        return _midpoint_cell_average(self.evaluate, w, s)

    def values(self, model: LatticeModel, terminal: str = "node") -> np.ndarray:
        _check_mode(terminal)
        w = model.terminal_w()
        out = self.evaluate(w) if terminal == "node" else self.cell_average(w, model.increment)
        out = np.broadcast_to(np.asarray(out, dtype=float), w.shape[:-1]).copy()
        if not np.all(np.isfinite(out)):
            raise ValueError(f"claim {self.label!r} is not finite on the lattice")
        return out

    def project(self, a: Sequence[float]) -> Claim:
        """The 2-D claim ``w -> self(a . w)`` for a claim written in ``w1``."""
        raise NotImplementedError(f"{type(self).__name__} cannot be projected")

    def __add__(self, other: Claim | float) -> Claim:
        if not isinstance(other, Claim):
            other = Constant(float(other))
        return combine([self, other], [1.0, 1.0])

    __radd__ = __add__

    def __mul__(self, c: float) -> Claim:
        return combine([self], [float(c)])

    __rmul__ = __mul__

    def __neg__(self) -> Claim:
        return combine([self], [-1.0])

    def __sub__(self, other: Claim | float) -> Claim:
        return self + (-1.0) * (other if isinstance(other, Claim) else Constant(float(other)))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r})"


@dataclass(frozen=True, repr=False)
class Constant(Claim):
    value: float
    label: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("constant claim must be finite")
        if not self.label:
            object.__setattr__(self, "label", f"const({_fmt(self.value)})")

    def evaluate(self, w):
        return np.full(w.shape[:-1], self.value)

    def cell_average(self, w, s):
        return self.evaluate(w)

    def project(self, a):
        return self


@dataclass(frozen=True, repr=False)
class LinearForm(Claim):
    """``a . W_T``; ``coord(k)`` is the unit form on coordinate ``k``."""

    coeffs: tuple[float, ...]
    label: str = ""
    bounded: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.label:
            object.__setattr__(self, "label", _form_label(self.coeffs))

    def evaluate(self, w):
        a = _pad(self.coeffs, w.shape[-1])
        return _dot(w, a)

    def cell_average(self, w, s):
        # symmetric cell: average of an affine map is its value at the centre
        return self.evaluate(w)

    def project(self, a):
        if any(c != 0.0 for c in self.coeffs[1:]):
            raise ValueError("only claims written in w1 can be projected")
        c = self.coeffs[0]
        return LinearForm(tuple(c * x for x in a), label=f"{self.label}@proj")


@dataclass(frozen=True, repr=False)
class Band(Claim):
    """Indicator of ``lo <= a . W_T <= hi`` (either bound may be infinite)."""

    coeffs: tuple[float, ...]
    lo: float = -math.inf
    hi: float = math.inf
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("band bounds must not be NaN")
        if not self.label:
            form = _form_label(self.coeffs)
            if math.isinf(self.lo) and math.isinf(self.hi):
                text = "true"
            elif math.isinf(self.hi):
                text = f"{form}>={_fmt(self.lo)}"
            elif math.isinf(self.lo):
                text = f"{_fmt(self.hi)}>={form}"
            else:
                text = f"{_fmt(self.hi)}>={form}>={_fmt(self.lo)}"
            object.__setattr__(self, "label", f"ind({text})")

    def evaluate(self, w):
        x = _dot(w, _pad(self.coeffs, w.shape[-1]))
        return ((x >= self.lo - SNAP) & (x <= self.hi + SNAP)).astype(float)

    def cell_average(self, w, s):
        a = _pad(self.coeffs, w.shape[-1])
        centre = _dot(w, a)
        half = np.sort(np.abs(a) * s)[::-1]
        p = float(half[0])
        q = float(half[1]) if half.size > 1 else 0.0
        return _uniform_sum_cdf(self.hi - centre, p, q) - _uniform_sum_cdf(self.lo - centre, p, q, left=True)

    def project(self, a):
        if any(c != 0.0 for c in self.coeffs[1:]):
            raise ValueError("only claims written in w1 can be projected")
        c = self.coeffs[0]
        return Band(tuple(c * x for x in a), self.lo, self.hi, label=f"{self.label}@proj")


@dataclass(frozen=True, repr=False)
class Combination(Claim):
    terms: tuple[tuple[float, Claim], ...]
    label: str = ""

    def __post_init__(self) -> None:
        if not self.label:
            parts = []
            for c, claim in self.terms:
                parts.append(claim.label if c == 1.0 else f"scale({_fmt(c)},{claim.label})")
            text = parts[0] if len(parts) == 1 else f"sum({','.join(parts)})"
            object.__setattr__(self, "label", text)
        object.__setattr__(self, "bounded", all(cl.bounded for _, cl in self.terms))

    def evaluate(self, w):
        return _lincomb([(c, cl.evaluate(w)) for c, cl in self.terms], w.shape[:-1])

    def cell_average(self, w, s):
        return _lincomb([(c, cl.cell_average(w, s)) for c, cl in self.terms], w.shape[:-1])

    def values(self, model, terminal="node"):
        _check_mode(terminal)
        shape = model.node_shape(model.steps)
        return _lincomb([(c, cl.values(model, terminal)) for c, cl in self.terms], shape)

    def project(self, a):
        return Combination(tuple((c, cl.project(a)) for c, cl in self.terms), label=f"{self.label}@proj")


@dataclass(frozen=True, repr=False, eq=False)
class FunctionClaim(Claim):
    """Arbitrary vectorised ``fn(w) -> values`` with ``w`` of shape ``(..., d)``.

    Cell averages use a midpoint sub-grid and are approximate.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "f"
    bounded: bool = True

    def evaluate(self, w):
        return np.asarray(self.fn(w), dtype=float)

    def project(self, a):
        a = np.asarray(a, dtype=float)
        fn = self.fn
        return FunctionClaim(lambda w: fn(_dot(w, a)[..., None]), f"{self.label}@proj", self.bounded)


@dataclass(frozen=True, repr=False, eq=False)
class TableClaim(Claim):
    """Explicit node values for one lattice shape (used for randomized claims)."""

    table: np.ndarray
    label: str = "table"

    def __post_init__(self) -> None:
        arr = np.array(self.table, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    def values(self, model, terminal="node"):
        _check_mode(terminal)
        if terminal != "node":
            raise ValueError("a tabulated claim has no continuous form to cell-average")
        if self.table.shape != model.node_shape(model.steps):
            raise ValueError(f"table shape {self.table.shape} does not match the lattice")
        if not np.all(np.isfinite(self.table)):
            raise ValueError("tabulated claim is not finite")
        return self.table.copy()

    def evaluate(self, w):
        raise ValueError("a tabulated claim is only defined on its own lattice")


def _dot(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    # explicit left-to-right sum so that zero coefficients leave values untouched
    out = w[..., 0] * a[0]
    for k in range(1, a.size):
        out = out + w[..., k] * a[k]
    return out


def _lincomb(parts, shape) -> np.ndarray:
    out = np.zeros(shape)
    for c, v in parts:
        out = out + (v if c == 1.0 else c * v)
    return out


def _uniform_sum_cdf(x, p: float, q: float, left: bool = False) -> np.ndarray:
    """CDF of ``p U1 + q U2`` for independent ``U ~ Unif[-1, 1]``, ``p >= q >= 0``.

    ``left`` evaluates ``P(X < x)``; it only differs from the CDF for the
    degenerate point mass ``p = q = 0``.
    """
    x = np.asarray(x, dtype=float)
    if p == 0.0:
        return (x > 0.0).astype(float) if left else (x >= 0.0).astype(float)
    if q == 0.0:
        return np.clip((x + p) / (2.0 * p), 0.0, 1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        lo_ramp = (x + p + q) ** 2 / (8.0 * p * q)
        flat = (x + p) / (2.0 * p)
        hi_ramp = 1.0 - (p + q - x) ** 2 / (8.0 * p * q)
    out = np.zeros_like(x)
    out = np.where((x > -p - q) & (x <= -p + q), lo_ramp, out)
    out = np.where((x > -p + q) & (x <= p - q), flat, out)
    out = np.where((x > p - q) & (x < p + q), hi_ramp, out)
    out = np.where(x >= p + q, 1.0, out)
    return out


def _midpoint_cell_average(fn, w: np.ndarray, s: float) -> np.ndarray:
    d = w.shape[-1]
    offsets = (np.arange(_CELL_POINTS) + 0.5) / _CELL_POINTS * 2.0 - 1.0
    grids = np.meshgrid(*([offsets] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1) * s
    total = np.zeros(w.shape[:-1])
    for shift in pts:
        total = total + np.asarray(fn(w + shift), dtype=float)
    return total / len(pts)


@dataclass(frozen=True)
class Event:
    """A terminal event. ``band`` carries ``(coeffs, lo, hi)`` when the event
    is a slab in a linear form, which enables exact cell averages."""

    predicate: Callable[[np.ndarray], np.ndarray]
    label: str
    band: tuple[tuple[float, ...], float, float] | None = None
    kind: str = "general"

    @classmethod
    def threshold(
        cls, coeffs: Sequence[float] | int, lo: float = -math.inf, hi: float = math.inf
    ) -> Event:
        if isinstance(coeffs, int):
            coeffs = tuple(1.0 if k == coeffs else 0.0 for k in range(1, coeffs + 1))
        claim = Band(tuple(coeffs), lo, hi)
        return cls(lambda w: claim.evaluate(w) > 0.5, claim.label[4:-1], (claim.coeffs, lo, hi), "band")

    @classmethod
    def always(cls) -> Event:
        return cls(lambda w: np.ones(w.shape[:-1], dtype=bool), "Omega", kind="always")

    @classmethod
    def never(cls) -> Event:
        return cls(lambda w: np.zeros(w.shape[:-1], dtype=bool), "empty", kind="never")


def indicator(event: Event) -> Claim:
    if event.kind == "always":
        return Constant(1.0, label="ind(Omega)")
    if event.kind == "never":
        return Constant(0.0, label="ind(empty)")
    if event.band is not None:
        coeffs, lo, hi = event.band
        return Band(coeffs, lo, hi)
    pred = event.predicate
    return FunctionClaim(lambda w: np.asarray(pred(w), dtype=bool).astype(float), f"ind({event.label})")


def combine(claims: Sequence[Claim], coefficients: Sequence[float]) -> Claim:
    if len(claims) != len(coefficients):
        raise ValueError(f"{len(claims)} claims but {len(coefficients)} coefficients")
    if not claims:
        raise ValueError("combine needs at least one claim")
    terms = []
    for c, cl in zip(coefficients, claims):
        c = float(c)
        if not math.isfinite(c):
            raise ValueError("coefficients must be finite")
        terms.append((c, cl))
    return Combination(tuple(terms))


def coord(k: int) -> LinearForm:
    if k < 1:
        raise ValueError("coordinates are numbered from 1")
    return LinearForm(tuple(1.0 if j == k else 0.0 for j in range(1, k + 1)), label=f"coord({k})")


def band_witness(n: float = 1.0) -> tuple[Claim, Claim]:
    """Comonotone pair ``I[W_T >= -n]`` and ``I[0 >= W_T >= -n]``."""
    return Band((1.0,), -n), Band((1.0,), -n, 0.0)


def cross_witness(n: float = 1.0) -> tuple[Claim, Claim]:
    """``I[W^1_T >= n]`` and ``I[W^2_T >= 0]`` on a 2-D lattice."""
    return Band((1.0, 0.0), n), Band((0.0, 1.0), 0.0)


def _pairwise_ok(x: np.ndarray, y: np.ndarray, chunk: int = 2048) -> bool:
    for start in range(0, x.size, chunk):
        dx = x[start : start + chunk, None] - x[None, :]
        dy = y[start : start + chunk, None] - y[None, :]
        if np.any(dx * dy < 0.0):
            return False
    return True


def _sorted_ok(x: np.ndarray, y: np.ndarray) -> bool:
    # comonotone iff no pair has x_a < x_b with y_a > y_b
    vals, inv = np.unique(x, return_inverse=True)
    lo = np.full(vals.size, np.inf)
    hi = np.full(vals.size, -np.inf)
    np.minimum.at(lo, inv, y)
    np.maximum.at(hi, inv, y)
    prefix = np.maximum.accumulate(hi)
    return bool(np.all(prefix[:-1] <= lo[1:]))


def is_comonotonic(
    model: LatticeModel, xi: Claim, eta: Claim, terminal: str = "node", exhaustive: bool | None = None
) -> bool:
    """Whether ``(xi(w) - xi(w')) (eta(w) - eta(w')) >= 0`` for every pair of
    terminal nodes. Small lattices are checked pair by pair; large ones use
    the equivalent sorted-group test."""
    x = xi.values(model, terminal).ravel()
    y = eta.values(model, terminal).ravel()
    if exhaustive is None:
        exhaustive = x.size <= 5000
    return _pairwise_ok(x, y) if exhaustive else _sorted_ok(x, y)


# --- mini-language --------------------------------------------------------

_UNUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_NUM = r"[+-]?" + _UNUM
_TERM = re.compile(rf"([+-]?)(?:({_UNUM})\*?)?w(\d+)")


def _parse_number(text: str) -> float | None:
    text = text.strip()
    if text in ("inf", "+inf"):
        return math.inf
    if text == "-inf":
        return -math.inf
    if re.fullmatch(_NUM, text):
        return float(text)
    return None


def _parse_form(text: str) -> tuple[float, ...]:
    text = text.replace(" ", "")
    pos = 0
    coeffs: dict[int, float] = {}
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or (pos > 0 and not m.group(1)):
            raise ValueError(f"cannot parse linear form {text!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        c = float(m.group(2)) if m.group(2) else 1.0
        k = int(m.group(3))
        if k < 1:
            raise ValueError("coordinates are numbered from 1")
        coeffs[k] = coeffs.get(k, 0.0) + sign * c
        pos = m.end()
    if not coeffs:
        raise ValueError(f"empty linear form {text!r}")
    return tuple(coeffs.get(k, 0.0) for k in range(1, max(coeffs) + 1))


def _parse_condition(text: str) -> Band:
    if re.search(r"(?<![<>])[<>](?!=)", text):
        raise ValueError(f"only non-strict comparisons are supported: {text!r}")
    ops = re.findall(r">=|<=", text)
    parts = re.split(r">=|<=", text)
    if not ops or len(set(ops)) != 1 or len(parts) not in (2, 3):
        raise ValueError(f"cannot parse condition {text!r}")
    if ops[0] == "<=":
        parts = parts[::-1]
    # now parts read high >= ... >= low
    nums = [_parse_number(p) for p in parts]
    forms = [i for i, v in enumerate(nums) if v is None]
    if len(forms) != 1:
        raise ValueError(f"condition needs exactly one linear form: {text!r}")
    idx = forms[0]
    coeffs = _parse_form(parts[idx])
    hi = nums[idx - 1] if idx > 0 else math.inf
    lo = nums[idx + 1] if idx + 1 < len(parts) else -math.inf
    return Band(coeffs, lo, hi)


def _split_args(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            raise ValueError("unbalanced parentheses")
        cur.append(ch)
    if depth:
        raise ValueError("unbalanced parentheses")
    out.append("".join(cur))
    return [p.strip() for p in out]


def parse_claim(spec: str) -> Claim:
    """Parse ``ind(...)``, ``sum(...)``, ``scale(c, ...)``, ``const(c)``,
    ``coord(k)`` and bare linear forms such as ``0.5*w1-w2``."""
    text = spec.strip()
    m = re.fullmatch(r"(\w+)\((.*)\)", text, flags=re.S)
    if not m:
        try:
            return LinearForm(_parse_form(text))
        except ValueError:
            raise ValueError(f"cannot parse claim {spec!r}") from None
    head, body = m.group(1), m.group(2)
    if head == "ind":
        return _parse_condition(body.replace(" ", ""))
    args = _split_args(body)
    if head == "const":
        v = _parse_number(args[0]) if len(args) == 1 else None
        if v is None or not math.isfinite(v):
            raise ValueError(f"const needs one finite number: {spec!r}")
        return Constant(v)
    if head == "coord":
        if len(args) != 1 or not args[0].isdigit():
            raise ValueError(f"coord needs an integer index: {spec!r}")
        return coord(int(args[0]))
    if head == "sum":
        parts = [parse_claim(a) for a in args]
        return combine(parts, [1.0] * len(parts)) if len(parts) > 1 else parts[0]
    if head == "scale":
        c = _parse_number(args[0]) if len(args) == 2 else None
        if c is None:
            raise ValueError(f"scale needs a number and a claim: {spec!r}")
        return combine([parse_claim(args[1])], [c])
    raise ValueError(f"unknown claim constructor {head!r}")
