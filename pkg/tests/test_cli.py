import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import ideonash
from ideonash import presets, report
from ideonash.cli import main
from ideonash.model1d import StrategyPair
from ideonash.sensitivity import perturb_deviation, sweep
from ideonash.solver1d import solve_nash

SCENARIOS = Path(ideonash.__file__).parent / "scenarios"


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


# --- CSV output ------------------------------------------------------------

def test_path_csv_lines(tmp_path):
    path = sweep(presets.ex1(), "k_right", [0.4, 0.6, 0.8])
    dest = report.emit_csv(path, tmp_path / "p.csv")
    lines = dest.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].split(",")[:3] == ["parameter", "x_left", "x_right"]


def test_sensitivity_csv_single_row(ex1, ex1_result):
    rep = perturb_deviation(ex1, ex1_result, 1e-3)
    header, rows = report.table(rep)
    assert len(rows) == 1
    row = dict(zip(header, rows[0]))
    assert row["pred_left"] == rep.predicted[0] and row["oracle_right"] == rep.oracle[1]


def test_cell_format():
    text = report.format_table(["a", "b", "c", "d"], [[1 / 3, True, 7, None]])
    assert text == "a,b,c,d\n0.333333333333,1,7,\n"


def test_pair_table():
    assert report.table(StrategyPair(-0.5, 0.5)) == (["x_left", "x_right"], [[-0.5, 0.5]])
    with pytest.raises(TypeError):
        report.table(object())


# --- commands --------------------------------------------------------------

def test_solve(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", SCENARIOS / "ex1.scn", "--out", tmp_path)
    assert code == 0
    values = dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)
    assert float(values["x_left*"]) == pytest.approx(-float(values["x_right*"]), abs=1e-8)
    assert float(values["det(H)"]) > 0
    csv = (tmp_path / "ex1-solve.csv").read_text().splitlines()
    assert len(csv) == 2 and csv[0].startswith("x_left,x_right")


def test_sweep_reports_sign_flip(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", SCENARIOS / "ex1.scn", "--param", "k_right", "--from", 0.2,
                       "--to", 1.2, "--steps", 21, "--out", tmp_path)
    assert code == 0
    flip = [line for line in out.splitlines() if "changes sign" in line]
    assert flip and float(flip[0].rsplit("=", 1)[1]) == pytest.approx(0.6, abs=0.01)
    assert len((tmp_path / "ex1-sweep.csv").read_text().splitlines()) == 22
    assert (tmp_path / "ex1-sweep-shifts.csv").exists()


def test_phi_sweep(capsys, tmp_path):
    code, _, _ = run(capsys, "phi-sweep", SCENARIOS / "ex-2d.scn", "--from", 0.5, "--to", 2,
                     "--steps", 16, "--out", tmp_path)
    assert code == 0
    assert len((tmp_path / "ex-2d-phi-sweep.csv").read_text().splitlines()) == 17


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.scn")))
def test_bundled_scenarios_run(capsys, tmp_path, name):
    code, _, err = run(capsys, "run", SCENARIOS / name, "--out", tmp_path, "--quiet")
    assert code == 0, err


@pytest.mark.parametrize("command", ["elasticity", "distperturb", "mixpath"])
def test_other_1d_commands(capsys, tmp_path, command):
    name = "ex1.scn" if command == "elasticity" else "transition-1.scn"
    code, out, err = run(capsys, command, SCENARIOS / name, "--out", tmp_path)
    assert code == 0, err
    assert out


def test_solve_nd_region_flag(capsys, tmp_path):
    code, out, _ = run(capsys, "solve-nd", SCENARIOS / "ex-2d.scn", "--region", "box", "--out", tmp_path)
    assert code == 0 and "gradient residual" in out


def test_deterministic_output(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "solve", SCENARIOS / "ex1.scn", "--out", tmp_path / d, "--quiet")[0] == 0
    assert (tmp_path / "a" / "ex1-solve.csv").read_bytes() == (tmp_path / "b" / "ex1-solve.csv").read_bytes()


def test_command_model_mismatch(capsys, tmp_path):
    code, _, err = run(capsys, "solve-nd", SCENARIOS / "ex1.scn", "--out", tmp_path)
    assert code == 1 and "needs a nd model" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", tmp_path / "nope.scn")
    assert code == 1 and err.startswith("error:")


def test_parse_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.scn"
    bad.write_text("[model]\nformat = x\n")
    code, _, err = run(capsys, "solve", bad)
    assert code == 1 and "line 2" in err


def test_diagnostics_failure_exit(capsys, tmp_path):
    text = (SCENARIOS / "ex1.scn").read_text()
    text = text.replace("left.ideal = -0.7", "left.ideal = -0.05").replace("right.ideal = 0.7", "right.ideal = 0.05")
    text = text.replace("left.k = 0.6", "left.k = 0.01").replace("right.k = 0.6", "right.k = 0.01")
    f = tmp_path / "touching.scn"
    f.write_text(text)
    code, _, err = run(capsys, "solve", f, "--out", tmp_path)
    assert code == 2 and "diagnostics failed" in err


def test_sweep_needs_param(capsys, tmp_path):
    text = (SCENARIOS / "ex1.scn").read_text().replace("param = k_right\n", "")
    f = tmp_path / "noparam.scn"
    f.write_text(text)
    code, _, err = run(capsys, "sweep", f, "--out", tmp_path)
    assert code == 1 and "--param" in err


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ideonash", "solve", str(SCENARIOS / "ex1.scn"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "x_left*" in out.stdout
