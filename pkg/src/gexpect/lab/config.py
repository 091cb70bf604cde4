"""Suite configuration: JSON documents merged onto per-suite defaults."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ..bsde import min_steps
from ..claims import TERMINAL_MODES
from ..generators import parse_generator

__all__ = ["ConfigError", "Tolerances", "SuiteConfig", "SUITES", "default_config", "all_defaults", "load_config"]

SUITES = ("equivalence", "divergence", "rotation", "compare")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    oracle: float = 5e-3
    oracle_band: float = 1e-2
    exact: float = 1e-12
    property: float = 1e-10
    stability: float = 0.2
    divergence_factor: float = 10.0


@dataclass(frozen=True)
class SuiteConfig:
    suite: str = "equivalence"
    dimension: int = 1
    horizon: float = 1.0
    steps: tuple[int, ...] = (100, 200, 400)
    generator: str = "linear:0.3"
    reference_generator: str = "linear:0.3"
    # a string is one claim; a two-element list is a pair whose sum is reported
    claims: tuple = (("ind(w1>=-1)", "ind(0>=w1>=-1)"),)
    lam: float = 0.5
    direction: tuple[float, ...] = ()
    terminal: str = "cell"
    workers: int = 1
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str | None = None
    format: str = "csv"

    def validate(self) -> SuiteConfig:
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.dimension not in (1, 2):
            raise ConfigError("dimension must be 1 or 2")
        if not math.isfinite(self.horizon) or self.horizon <= 0:
            raise ConfigError("horizon must be finite and positive")
        if not self.steps or any(int(n) != n or n < 1 for n in self.steps):
            raise ConfigError("steps must be positive integers")
        if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
            raise ConfigError("step ladder must be strictly increasing")
        if self.terminal not in TERMINAL_MODES:
            raise ConfigError(f"terminal must be one of {TERMINAL_MODES}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lam must lie in [0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.suite == "rotation":
            if self.dimension != 2:
                raise ConfigError("the rotation check runs on a 2-D lattice")
            if len(self.direction) != 2:
                raise ConfigError("rotation needs a 2-D direction")
        for spec in {self.generator, self.reference_generator}:
            try:
                g = parse_generator(spec, self.dimension, self.horizon)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            for n in self.steps:
                if g.lipschitz * math.sqrt(self.horizon / n) > 0.5:
                    raise ConfigError(
                        f"N={n} violates the monotonicity guard for {spec}; "
                        f"use N >= {min_steps(g.lipschitz, self.horizon)}"
                    )
        for entry in self.claims:
            if not isinstance(entry, str) and (len(entry) != 2 or not all(isinstance(c, str) for c in entry)):
                raise ConfigError(f"claim entry {entry!r} must be a string or a pair of strings")
        return self

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["steps"] = list(self.steps)
        out["claims"] = [c if isinstance(c, str) else list(c) for c in self.claims]
        out["direction"] = list(self.direction)
        return out


_R = 1.0 / math.sqrt(2.0)

_DEFAULTS: dict[tuple[str, int], dict[str, Any]] = {
    ("equivalence", 1): {},
    ("compare", 1): {"steps": (400,)},
    ("divergence", 1): {"generator": "abs:0.5", "terminal": "node"},
    ("divergence", 2): {
        "generator": "euclid:0.5",
        "reference_generator": "linear2:0.2,0.4",
        "claims": (("ind(w1>=1)", "ind(w2>=0)"),),
        "steps": (50, 100, 200),
        "terminal": "node",
    },
    ("rotation", 2): {
        "generator": "euclid:0.5",
        "reference_generator": "linear2:0.2,0.4",
        "claims": ("ind(w1>=0)",),
        "direction": (_R, _R),
        "steps": (50, 100, 200),
    },
}


def default_config(suite: str, dimension: int | None = None) -> SuiteConfig:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    if dimension is None:
        dimension = 2 if suite == "rotation" else 1
    base = _DEFAULTS.get((suite, dimension))
    if base is None:
        # fall back to the 1-D layout with 2-D generators
        base = dict(_DEFAULTS.get((suite, 1), {}))
        base.setdefault("generator", "linear2:0.2,0.4")
        base["reference_generator"] = "linear2:0.2,0.4"
        if base["generator"] in ("linear:0.3", "abs:0.5"):
            base["generator"] = "linear2:0.2,0.4" if suite != "divergence" else "euclid:0.5"
        base.setdefault("claims", (("ind(w1>=1)", "ind(w2>=0)"),))
    return SuiteConfig(suite=suite, dimension=dimension, **base)


def all_defaults() -> dict[str, Any]:
    keys = [("equivalence", 1), ("divergence", 1), ("divergence", 2), ("rotation", 2), ("compare", 1)]
    return {f"{s}/d{d}": default_config(s, d).to_dict() for s, d in keys}


def _coerce(cfg: SuiteConfig, data: dict[str, Any]) -> SuiteConfig:
    known = {f.name for f in fields(SuiteConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    updates: dict[str, Any] = {}
    for key, value in data.items():
        if key == "tolerances":
            tol_known = {f.name for f in fields(Tolerances)}
            bad = set(value) - tol_known
            if bad:
                raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
            updates[key] = replace(cfg.tolerances, **{k: float(v) for k, v in value.items()})
        elif key == "steps":
            value = [value] if isinstance(value, int) else value
            updates[key] = tuple(int(v) for v in value)
        elif key == "claims":
            updates[key] = tuple(c if isinstance(c, str) else tuple(c) for c in value)
        elif key == "direction":
            updates[key] = tuple(float(v) for v in value)
        elif key in ("horizon", "lam"):
            updates[key] = float(value)
        elif key in ("dimension", "workers"):
            updates[key] = int(value)
        else:
            updates[key] = value
    return replace(cfg, **updates)


def load_config(path: str | Path | None, suite: str, overrides: dict[str, Any] | None = None) -> SuiteConfig:
    """Defaults for ``suite`` (and the requested dimension), then the JSON
    file, then command-line overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    data_suite = data.pop("suite", suite)
    if data_suite != suite:
        raise ConfigError(f"config is for suite {data_suite!r}, not {suite!r}")
    dim = overrides.get("dimension", data.get("dimension"))
    cfg = default_config(suite, dim)
    try:
        cfg = _coerce(cfg, data)
        cfg = _coerce(cfg, overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()
