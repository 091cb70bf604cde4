import json
import shutil
import subprocess

import pytest

from gexpect.cli import main
from gexpect.lab import read_report


def test_print_defaults(capsys):
    assert main(["--print-defaults"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["divergence/d1"]["generator"] == "abs:0.5"


def test_suite_print_defaults(capsys):
    assert main(["suite", "rotation", "--print-defaults"]) == 0
    assert json.loads(capsys.readouterr().out)["dimension"] == 2


def test_solve(capsys):
    assert main(["solve", "--g", "zero", "--claim", "ind(w1>=0)", "--steps", "2"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["y0"] == 0.75


def test_solve_ladder_and_cell(capsys):
    assert main(["solve", "--g", "linear:0.3", "--claim", "ind(w1>=-1)", "--steps", "100,200", "--terminal", "cell"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["N"] for r in rows] == [100, 200]


def test_capacity_and_choquet(capsys, tmp_path):
    out = tmp_path / "cap.csv"
    assert main(["capacity", "--g", "abs:0.5", "--claim", "sum(ind(w1>=-1),ind(0>=w1>=-1))", "--steps", "20", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "N,level,capacity" and len(lines) == 4
    assert main(["choquet", "--g", "abs:0.5", "--claim", "ind(w1>=0)", "--steps", "20"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["levels"] == 2


def test_suite_pass_and_fail_codes(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["suite", "equivalence", "--steps", "100,200", "--out", str(out)]) == 0
    assert read_report(out).passed
    assert main(["suite", "equivalence", "--g", "abs:0.5", "--steps", "100,200", "--out", str(out)]) == 1


def test_suite_json_output(tmp_path):
    out = tmp_path / "r.json"
    assert main(["suite", "divergence", "--steps", "100,200", "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["verdicts"]


def test_suite_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"steps": [50, 100], "direction": [1.0, 0.0]}))
    assert main(["suite", "rotation", "--config", str(cfg), "--out", str(tmp_path / "r.csv")]) == 0


def test_claim_pairs_from_flags(tmp_path):
    out = tmp_path / "r.csv"
    rc = main(["suite", "divergence", "--claim", "ind(w1>=-1);ind(0>=w1>=-1)", "--steps", "100,200", "--out", str(out)])
    assert rc == 0
    assert read_report(out).rows[0].claim == "sum(ind(w1>=-1),ind(0>=w1>=-1))"


@pytest.mark.parametrize(
    "argv",
    [
        ["suite", "equivalence", "--steps", "200,100"],
        ["suite", "divergence", "--g", "abs:9", "--steps", "10"],
        ["suite", "equivalence", "--config", "/nonexistent.json"],
        ["solve", "--g", "abs:0.5", "--claim", "ind(w1>0)"],
        ["solve", "--g", "abs:0.5"],
        ["solve", "--g", "abs:9", "--claim", "ind(w1>=0)", "--steps", "10"],
        ["suite", "equivalence", "--out", "/nonexistent/dir/r.csv", "--steps", "20"],
    ],
)
def test_errors_exit_2(argv):
    assert main(argv) == 2


def test_no_command():
    assert main([]) == 2


def test_check_generator(capsys):
    assert main(["check", "generator", "--g", "euclid:0.5", "--dim", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["hypotheses"]["passed"] and doc["positive_homogeneity"]["max_deviation"] <= 1e-15
    assert main(["check", "generator", "--g", "ycontrol:1"]) == 1


@pytest.mark.skipif(shutil.which("gexpect") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["gexpect", "solve", "--claim", "ind(w1>=0)", "--steps", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)[0]["y0"] == 0.75
