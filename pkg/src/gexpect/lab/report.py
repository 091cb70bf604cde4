"""Suite reports and their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path

__all__ = ["COLUMNS", "Row", "SuiteReport", "format_report", "emit_report", "read_report"]

COLUMNS = (
    "suite", "generator", "claim", "dimension", "N", "e_g", "c_g", "gap",
    "comono_gap", "oracle", "oracle_dev", "verdict", "runtime_ms",
)
_FLOATS = {"e_g", "c_g", "gap", "comono_gap", "oracle", "oracle_dev", "runtime_ms"}
_INTS = {"dimension", "N"}


@dataclass(frozen=True)
class Row:
    suite: str
    generator: str
    claim: str
    dimension: int
    N: int
    e_g: float | None = None
    c_g: float | None = None
    gap: float | None = None
    comono_gap: float | None = None
    oracle: float | None = None
    oracle_dev: float | None = None
    verdict: str = ""
    runtime_ms: float | None = None

    def __post_init__(self) -> None:
        for name in _FLOATS:
            v = getattr(self, name)
            if v is not None:
                v = float(v)
                if not math.isfinite(v):
                    raise ValueError(f"{name} is not finite in row {self.claim!r} N={self.N}: {v!r}")
                object.__setattr__(self, name, v)


@dataclass
class SuiteReport:
    suite: str
    rows: list[Row] = field(default_factory=list)
    # claim label -> PASS / FAIL
    verdicts: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v == "PASS" for v in self.verdicts.values())

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _cell(name: str, value) -> str:
    if value is None:
        return ""
    if name in _FLOATS:
        return "%.17g" % value
    return str(value)


def format_report(report: SuiteReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in report.rows:
            writer.writerow([_cell(f.name, getattr(row, f.name)) for f in fields(Row)])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "suite": report.suite,
            "columns": list(COLUMNS),
            "rows": [dict(zip(COLUMNS, astuple(r))) for r in report.rows],
            "verdicts": report.verdicts,
        }
        # floats are written with repr, so reading back is lossless
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: SuiteReport, path: str | Path | None = None, fmt: str = "csv") -> str:
    text = format_report(report, fmt)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def _parse(name: str, text: str):
    if text == "":
        return None if name in _FLOATS else text
    if name in _FLOATS:
        return float(text)
    if name in _INTS:
        return int(text)
    return text


def _verdicts(rows: list[Row]) -> dict[str, str]:
    out: dict[str, str] = {}
    for r in rows:
        if r.verdict:
            out[r.claim] = r.verdict
    return out


def read_report(path: str | Path) -> SuiteReport:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = [Row(**{k: r[k] for k in COLUMNS}) for r in doc["rows"]]
        return SuiteReport(doc["suite"], rows, dict(doc.get("verdicts", {})))
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected report header {header}")
    rows = [Row(**{k: _parse(k, v) for k, v in zip(COLUMNS, line)}) for line in reader if line]
    suite = rows[0].suite if rows else ""
    return SuiteReport(suite, rows, _verdicts(rows))
