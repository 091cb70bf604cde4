"""Command-line entry point.

Exit codes: 0 when every verdict passes (or the command has none),
1 when a verdict fails, 2 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

import numpy as np

from .bsde import solve_bsde
from .choquet import capacity_curve, choquet_expectation
from .claims import TERMINAL_MODES, parse_claim
from .generators import check_hypotheses, parse_generator, probe_additivity, probe_positive_homogeneity
from .lab import SUITES, all_defaults, default_config, emit_report, load_config, run_suite
from .lattice import build_lattice

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _ladder(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be an integer or a comma list, got {text!r}") from None


def _common(p: argparse.ArgumentParser, suite: bool = False) -> None:
    p.add_argument("--g", dest="generator", help="generator spec, e.g. abs:0.5")
    p.add_argument("--claim", action="append", help="claim spec; a+b pairs are given as 'a;b'")
    p.add_argument("--dim", dest="dimension", type=int, choices=(1, 2))
    p.add_argument("--T", dest="horizon", type=float)
    p.add_argument("--steps", type=_ladder)
    p.add_argument("--terminal", choices=TERMINAL_MODES)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    if suite:
        p.add_argument("--config")
        p.add_argument("--print-defaults", action="store_true")
        p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gexpect", description=__doc__.splitlines()[0])
    parser.add_argument("--print-defaults", action="store_true", help="print every embedded suite config")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")
    for name in ("solve", "capacity", "choquet"):
        _common(sub.add_parser(name))
    _common(sub.add_parser("compare"), suite=True)
    suite = sub.add_parser("suite")
    suite.add_argument("name", choices=[s for s in SUITES if s != "compare"])
    _common(suite, suite=True)
    check = sub.add_parser("check")
    check.add_argument("what", choices=("generator",))
    check.add_argument("--g", dest="generator", required=True)
    check.add_argument("--dim", dest="dimension", type=int, choices=(1, 2), default=1)
    check.add_argument("--T", dest="horizon", type=float, default=1.0)
    return parser


def _claims(args) -> list | None:
    if not args.claim:
        return None
    return [c if ";" not in c else c.split(";") for c in args.claim]


def _single(args):
    dim = args.dimension or 1
    T = args.horizon or 1.0
    steps = args.steps or [200]
    g = parse_generator(args.generator or "zero", dim, T)
    if not args.claim or len(args.claim) != 1:
        raise ValueError("give exactly one --claim")
    return g, parse_claim(args.claim[0]), dim, T, steps, args.terminal or "node"


def _print(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_solve(args) -> int:
    g, f, dim, T, steps, terminal = _single(args)
    rows = []
    for n in steps:
        sol = solve_bsde(build_lattice(dim, T, n), g, f, terminal)
        rows.append({"generator": g.label, "claim": f.label, "N": n, "y0": sol.y0, "z0": sol.z0.tolist()})
    _print(json.dumps(rows, indent=2) + "\n", args.out)
    return EXIT_PASS


def _cmd_capacity(args) -> int:
    g, f, dim, T, steps, terminal = _single(args)
    lines = ["N,level,capacity"]
    for n in steps:
        curve = capacity_curve(build_lattice(dim, T, n), g, f, terminal)
        lines += ["%d,%.17g,%.17g" % (n, v, c) for v, c in zip(curve.levels, curve.capacities)]
    _print("\n".join(lines) + "\n", args.out)
    return EXIT_PASS


def _cmd_choquet(args) -> int:
    g, f, dim, T, steps, terminal = _single(args)
    rows = []
    for n in steps:
        res = choquet_expectation(build_lattice(dim, T, n), g, f, terminal)
        rows.append({"generator": g.label, "claim": f.label, "N": n, "c_g": res.value, "levels": len(res.terms)})
    _print(json.dumps(rows, indent=2) + "\n", args.out)
    return EXIT_PASS


def _suite_config(args, suite: str):
    overrides = {
        "dimension": args.dimension,
        "horizon": args.horizon,
        "steps": args.steps,
        "generator": args.generator,
        "claims": _claims(args),
        "terminal": args.terminal,
        "format": args.format,
        "output": args.out,
        "workers": args.workers,
    }
    return load_config(args.config, suite, overrides)


def _cmd_suite(args, suite: str) -> int:
    if args.print_defaults:
        print(json.dumps(default_config(suite, args.dimension).to_dict(), indent=2))
        return EXIT_PASS
    cfg = _suite_config(args, suite)
    report = run_suite(cfg)
    text = emit_report(report, cfg.output, cfg.format)
    if cfg.output is None:
        sys.stdout.write(text)
    for label, verdict in report.verdicts.items():
        print(f"{verdict} {suite} {label}", file=sys.stderr)
    if suite == "compare":
        return EXIT_PASS
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_check(args) -> int:
    g = parse_generator(args.generator, args.dimension, args.horizon)
    hyp = check_hypotheses(g)
    homog = probe_positive_homogeneity(g)
    add = probe_additivity(g)
    doc = {
        "generator": g.label,
        "hypotheses": asdict(hyp),
        "positive_homogeneity": asdict(homog),
        "additivity": {"max_deviation": add.max_deviation, "worst": add.worst,
                       "h": {repr(t): v for t, v in add.h.items()} if add.h else None},
        "linear": g.is_linear,
    }
    print(json.dumps(doc, indent=2, default=_jsonable))
    return EXIT_PASS if hyp.passed else EXIT_FAIL


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return str(x)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.print_defaults and args.command is None:
        print(json.dumps(all_defaults(), indent=2))
        return EXIT_PASS
    if args.command is None:
        parser.print_help()
        return EXIT_ERROR
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "capacity":
            return _cmd_capacity(args)
        if args.command == "choquet":
            return _cmd_choquet(args)
        if args.command == "compare":
            return _cmd_suite(args, "compare")
        if args.command == "suite":
            return _cmd_suite(args, args.name)
        return _cmd_check(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
