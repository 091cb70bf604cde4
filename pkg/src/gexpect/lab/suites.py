"""Equivalence, divergence and rotation experiments.

All suites share one cell evaluator: build the lattice, evaluate the claim,
solve for E_g and assemble C_g. Only the verdict rule differs, so swapping the
generator spec between a linear and a nonlinear driver flips the outcome.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..bsde import solve_bsde
from ..choquet import choquet_expectation
from ..claims import Claim, TableClaim, is_comonotonic, parse_claim
from ..generators import Generator, parse_generator, restrict_to_direction
from ..lattice import build_lattice
from ..oracles import DriftSpec, linear_girsanov_expectation, monotone_direction
from .config import ConfigError, SuiteConfig
from .report import Row, SuiteReport

__all__ = [
    "run_suite",
    "run_equivalence_suite",
    "run_divergence_suite",
    "rotation_reduction_check",
    "run_compare",
    "shrinks",
]

log = logging.getLogger(__name__)


def shrinks(values: list[float], floor: float) -> bool:
    """``|v|`` strictly decreasing along the ladder, where anything at or
    below ``floor`` counts as already converged."""
    mags = [abs(v) for v in values]
    return all(b <= floor or b < a for a, b in zip(mags, mags[1:]))


@dataclass(frozen=True)
class _Entry:
    label: str
    parts: tuple[Claim, ...]

    @property
    def total(self) -> Claim:
        return self.parts[0] if len(self.parts) == 1 else self.parts[0] + self.parts[1]


def _entries(cfg: SuiteConfig) -> list[_Entry]:
    out = []
    for spec in cfg.claims:
        try:
            parts = (parse_claim(spec),) if isinstance(spec, str) else tuple(parse_claim(s) for s in spec)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        label = parts[0].label if len(parts) == 1 else f"sum({parts[0].label},{parts[1].label})"
        out.append(_Entry(label, parts))
    return out


def _generator(cfg: SuiteConfig, spec: str, dimension: int | None = None) -> Generator:
    try:
        return parse_generator(spec, dimension or cfg.dimension, cfg.horizon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _oracle(g: Generator, claim: Claim, T: float) -> float | None:
    if g.drift is None:
        return None
    try:
        return linear_girsanov_expectation(g.drift, claim, T)
    except ValueError:
        return None


def _ms(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1e3, 3)


def _evaluate(cfg: SuiteConfig, g: Generator, entry: _Entry, n: int, terminal: str, choquet: bool = True) -> dict:
    t0 = time.perf_counter()
    model = build_lattice(cfg.dimension, cfg.horizon, n)
    parts = [p.values(model, terminal) for p in entry.parts]
    total = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    e = solve_bsde(model, g, total).y0
    c = choquet_expectation(model, g, total, workers=cfg.workers).value if choquet else None
    comono = None
    if len(parts) == 2:
        comono = e - solve_bsde(model, g, parts[0]).y0 - solve_bsde(model, g, parts[1]).y0
    return {"model": model, "parts": parts, "e": e, "c": c, "comono": comono, "t0": t0}


# --- equivalence -----------------------------------------------------------


def run_equivalence_suite(cfg: SuiteConfig) -> SuiteReport:
    """E_g against C_g along the ladder; passes when the gap closes."""
    cfg.validate()
    g = _generator(cfg, cfg.generator)
    if not g.is_linear:
        log.warning("equivalence suite run with %s, which is not in the linear family", g.label)
    tol = cfg.tolerances
    report = SuiteReport("equivalence")
    for entry in _entries(cfg):
        oracle = _oracle(g, entry.total, cfg.horizon)
        rows = []
        for n in cfg.steps:
            r = _evaluate(cfg, g, entry, n, cfg.terminal)
            dev = None if oracle is None else r["e"] - oracle
            rows.append(Row("equivalence", g.label, entry.label, cfg.dimension, n, r["e"], r["c"],
                            r["e"] - r["c"], r["comono"], oracle, dev, "", _ms(r["t0"])))
        gaps = [row.gap for row in rows]
        ok = shrinks(gaps, tol.exact) and abs(gaps[-1]) <= tol.oracle
        if oracle is not None:
            ok = ok and abs(rows[-1].oracle_dev) <= tol.oracle_band
        verdict = "PASS" if ok else "FAIL"
        report.rows.extend(_stamp(rows, verdict))
        report.verdicts[entry.label] = verdict
    return report


def _stamp(rows: list[Row], verdict: str) -> list[Row]:
    # the verdict belongs to the finest lattice of the ladder
    last = rows[-1]
    return rows[:-1] + [Row(**{**last.__dict__, "verdict": verdict})]


# --- divergence ------------------------------------------------------------


def _witness_parts(cfg: SuiteConfig, entry: _Entry) -> _Entry:
    """The certified comonotone pair for an entry. On d=2 the pair (I1, I2)
    becomes ``((1-lam) I1, lam (I1 + I2))`` whose sum is ``I1 + lam I2``; its
    additivity gap is the residual of the two-indicator identity."""
    if len(entry.parts) != 2:
        raise ConfigError("the divergence suite needs claim pairs")
    if cfg.dimension == 1:
        return entry
    i1, i2 = entry.parts
    lam = cfg.lam
    x, y = i1 * (1.0 - lam), (i1 + i2) * lam
    return _Entry(f"identity({i1.label},{i2.label};lam={lam:g})", (x, y))


def run_divergence_suite(cfg: SuiteConfig) -> SuiteReport:
    """Comonotonic-additivity gap of E_g on a certified comonotone pair,
    calibrated against the reference linear driver on the same lattices."""
    cfg.validate()
    g = _generator(cfg, cfg.generator)
    ref = _generator(cfg, cfg.reference_generator)
    if g.is_linear:
        log.warning("divergence suite run with the linear driver %s", g.label)
    tol = cfg.tolerances
    report = SuiteReport("divergence")
    for raw in _entries(cfg):
        entry = _witness_parts(cfg, raw)
        main, calib = [], []
        for n in cfg.steps:
            r = _evaluate(cfg, g, entry, n, cfg.terminal)
            model = r["model"]
            x, y = r["parts"]
            if not is_comonotonic(model, TableClaim(x), TableClaim(y)):
                raise ConfigError(f"{entry.label} is not comonotone on N={n} ({cfg.terminal} terminal)")
            main.append(Row("divergence", g.label, entry.label, cfg.dimension, n, r["e"], r["c"],
                            r["e"] - r["c"], r["comono"], None, None, "", _ms(r["t0"])))
            q = _evaluate(cfg, ref, entry, n, cfg.terminal)
            oracle = _oracle(ref, entry.total, cfg.horizon)
            calib.append(Row("divergence", ref.label, entry.label, cfg.dimension, n, q["e"], q["c"],
                             q["e"] - q["c"], q["comono"], oracle,
                             None if oracle is None else q["e"] - oracle, "", _ms(q["t0"])))
        verdict = "PASS" if _diverges(main, calib, tol) else "FAIL"
        report.rows.extend(_stamp(main, verdict) + calib)
        report.verdicts[entry.label] = verdict
    return report


def _diverges(main: list[Row], calib: list[Row], tol) -> bool:
    gap, ref_gap = main[-1].comono_gap, calib[-1].comono_gap
    threshold = max(tol.divergence_factor * abs(ref_gap), tol.exact)
    if abs(gap) <= threshold:
        return False
    if len(main) > 1:
        prev = main[-2].comono_gap
        if abs(gap - prev) > tol.stability * abs(gap):
            return False
    threshold = max(tol.divergence_factor * abs(calib[-1].gap), tol.exact)
    return abs(main[-1].gap) > threshold


# --- rotation --------------------------------------------------------------


def _rotation_oracle(g1: Generator, claim: Claim, T: float, times) -> float | None:
    """Linear Girsanov for a linear restricted driver, otherwise the
    drift-shift value for a monotone claim under a time-constant driver."""
    if g1.drift is not None:
        return _oracle(g1, claim, T)
    direction = monotone_direction(claim, T)
    if direction is None:
        return None
    unit = 1.0 if direction == "increasing" else -1.0
    rates = {float(g1(t, 0.0, np.array([unit]))) for t in times}
    if len(rates) != 1:
        return None
    rate = unit * rates.pop()
    try:
        return linear_girsanov_expectation(DriftSpec.constant(rate, T), claim, T)
    except ValueError:
        return None


def rotation_reduction_check(cfg: SuiteConfig) -> SuiteReport:
    """2-D solve of ``f(a . W_T)`` against the 1-D solve under the
    restricted driver. Coordinate directions must agree to ``exact``."""
    cfg.validate()
    g = _generator(cfg, cfg.generator, 2)
    try:
        g1 = restrict_to_direction(g, cfg.direction)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    axis = sorted(abs(v) for v in cfg.direction) == [0.0, 1.0]
    tol = cfg.tolerances
    report = SuiteReport("rotation")
    for spec in cfg.claims:
        if not isinstance(spec, str):
            raise ConfigError("rotation claims are single functions of the projection")
        try:
            f = parse_claim(spec)
            f2 = f.project(cfg.direction)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        times = np.linspace(0.0, cfg.horizon, 9)[:-1]
        oracle = _rotation_oracle(g1, f, cfg.horizon, times)
        rows, diffs = [], []
        for n in cfg.steps:
            t0 = time.perf_counter()
            e2 = solve_bsde(build_lattice(2, cfg.horizon, n), g, f2, cfg.terminal).y0
            ms2 = _ms(t0)
            t1 = time.perf_counter()
            e1 = solve_bsde(build_lattice(1, cfg.horizon, n), g1, f, cfg.terminal).y0
            ms1 = _ms(t1)
            diff = e2 - e1
            diffs.append(diff)
            dev2 = None if oracle is None else e2 - oracle
            dev1 = None if oracle is None else e1 - oracle
            rows.append(Row("rotation", g.label, f2.label, 2, n, e2, None, diff, None, oracle, dev2, "", ms2))
            rows.append(Row("rotation", g1.label, f.label, 1, n, e1, None, diff, None, oracle, dev1, "", ms1))
        if axis:
            ok = all(abs(d) <= tol.exact for d in diffs)
        else:
            ok = shrinks(diffs, tol.exact)
        verdict = "PASS" if ok else "FAIL"
        report.rows.extend(_stamp(rows, verdict))
        report.verdicts[f2.label] = verdict
    return report


# --- compare ---------------------------------------------------------------


def run_compare(cfg: SuiteConfig) -> SuiteReport:
    """E_g and C_g for each claim and N, with no verdict."""
    cfg.validate()
    g = _generator(cfg, cfg.generator)
    report = SuiteReport("compare")
    for entry in _entries(cfg):
        oracle = _oracle(g, entry.total, cfg.horizon)
        for n in cfg.steps:
            r = _evaluate(cfg, g, entry, n, cfg.terminal)
            dev = None if oracle is None else r["e"] - oracle
            report.rows.append(Row("compare", g.label, entry.label, cfg.dimension, n, r["e"], r["c"],
                                   r["e"] - r["c"], r["comono"], oracle, dev, "", _ms(r["t0"])))
    return report


_RUNNERS = {
    "equivalence": run_equivalence_suite,
    "divergence": run_divergence_suite,
    "rotation": rotation_reduction_check,
    "compare": run_compare,
}


def run_suite(cfg: SuiteConfig) -> SuiteReport:
    return _RUNNERS[cfg.suite](cfg)
