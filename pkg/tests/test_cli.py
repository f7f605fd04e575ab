import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from ats_memory.cli import TRACE_COLUMNS, main, parse_grid

EXP = Path(__file__).parent.parent / "experiments"


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_run_constant(tmp_path, capsys):
    assert run_cli("run", EXP / "revival_constant.ats", "--out", tmp_path, "--dt-output", 0.01) == 0
    stdout = json.loads(capsys.readouterr().out)
    with open(tmp_path / "traces.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) - 1 == math.floor(6.5 / 0.01) + 1
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["ledger"]["balance_error"] < 0.01
    assert stdout["efficiencies"]["recall_1"] == pytest.approx(summary["efficiencies"]["recall_1"])
    # the trace file carries the same output the summary was computed from
    t = np.array([float(r[0]) for r in rows[1:]])
    e2 = np.array([float(r[3]) ** 2 + float(r[4]) ** 2 for r in rows[1:]])
    a, b = summary["windows"]["recall_1"]["peak_time"], summary["windows"]["recall_2"]["peak_time"]
    assert t[np.argmax(np.where(t > 2.0, e2, 0))] == pytest.approx(a, abs=0.011)
    assert b > a


def test_run_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run_cli("run", EXP / "exp_pulsed.ats", "--out", d, "--dt-output", 5) == 0
    for name in ("exp_pulsed_traces.csv", "exp_pulsed_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert not list(a.glob("*.tmp*"))


def test_run_euler_parity(tmp_path, capsys):
    assert run_cli("run", EXP / "revival_constant.ats", "--out", tmp_path / "rk") == 0
    assert run_cli("run", EXP / "revival_constant.ats", "--out", tmp_path / "eu", "--euler",
                   "--dt", 0.0002) == 0
    rk = json.loads((tmp_path / "rk" / "summary.json").read_text())["efficiencies"]["recall_1"]
    eu = json.loads((tmp_path / "eu" / "summary.json").read_text())["efficiencies"]["recall_1"]
    assert eu == pytest.approx(rk, rel=0.01)


def test_run_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.ats"
    bad.write_text((EXP / "revival_constant.ats").read_text().replace("d = 13", "d = oops"))
    assert run_cli("run", bad, "--out", tmp_path) == 2
    assert "E_SYNTAX" in capsys.readouterr().err
    assert run_cli("run", tmp_path / "missing.ats") == 2


def test_run_numeric_failure(tmp_path, capsys):
    text = (EXP / "revival_constant.ats").read_text().replace("t_end = 6.5", "t_end = 6.5\ndt = 0.5")
    f = tmp_path / "coarse.ats"
    f.write_text(text)
    assert run_cli("run", f, "--out", tmp_path) == 3


def test_sweep_analytic(capsys):
    assert run_cli("sweep", "--d", "40", "--F", "12", "--direction", "fwd", "--engine", "analytic") == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert float(rows[0]["eta_analytic"]) == pytest.approx(0.483, abs=5e-4)


def test_sweep_jobs_byte_identical(tmp_path, capsys):
    one, two = tmp_path / "j1.csv", tmp_path / "j2.csv"
    args = ("sweep", "--d", "12:36:12", "--F", "12", "--engine", "both", "--n-z", 60)
    assert run_cli(*args, "--jobs", 1, "--out", one) == 0
    assert run_cli(*args, "--jobs", 2, "--out", two) == 0
    assert one.read_bytes() == two.read_bytes()
    assert len(one.read_text().splitlines()) == 4


def test_sweep_all_failed(capsys):
    assert run_cli("sweep", "--d", "10", "--F", "0", "--engine", "analytic") == 4
    assert run_cli("sweep", "--d", "5:1:1", "--F", "1") == 2


def test_parse_grid():
    assert parse_grid("5:100:20") == [5, 25, 45, 65, 85]
    assert parse_grid("1,2.5") == [1, 2.5]


def test_spectrum_fit(tmp_path, capsys):
    out = tmp_path / "sp.csv"
    assert run_cli("spectrum", "--d", 13, "--omega-c", 7, "--range=-14:14:561", "--fit",
                   "--out", out) == 0
    fit = json.loads(Path(str(out) + ".fit.json").read_text())
    assert fit["delta_A"] == pytest.approx(7.0, rel=0.02)
    assert out.read_text().startswith("detuning,od\n")


def test_spectrum_single_line(tmp_path, capsys):
    out = tmp_path / "sp.csv"
    assert run_cli("spectrum", "--d", 13, "--omega-c", 0, "--range=-5:5:101", "--fit",
                   "--out", out) == 0
    assert "SingleLine" in capsys.readouterr().err
    assert not Path(str(out) + ".fit.json").exists()


def test_analyze_compression(tmp_path, capsys):
    assert run_cli("run", EXP / "exp_compress.ats", "--out", tmp_path) == 0
    assert run_cli("analyze", tmp_path / "traces.csv", "--out", tmp_path / "m.json") == 0
    m = json.loads((tmp_path / "m.json").read_text())
    assert m["compression"] == pytest.approx(2.0, rel=0.2)


def test_analyze_visibility_and_decay(tmp_path, capsys):
    assert run_cli("run", EXP / "revival_constant.ats", "--out", tmp_path) == 0
    capsys.readouterr()
    th = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    (tmp_path / "v.csv").write_text("theta,intensity\n" + "".join(
        f"{a},{1 + np.cos(a)}\n" for a in th))
    T = np.arange(100, 700, 100)
    (tmp_path / "d.csv").write_text("T,efficiency\n" + "".join(
        f"{a},{0.1 * np.exp(-a / 300)}\n" for a in T))
    assert run_cli("analyze", tmp_path / "traces.csv", "--visibility", tmp_path / "v.csv",
                   "--decay", tmp_path / "d.csv") == 0
    m = json.loads(capsys.readouterr().out)
    assert m["visibility"]["visibility"] == pytest.approx(1.0)
    assert m["decay"]["T_d"] == pytest.approx(300.0)


def test_analyze_schema_mismatch(tmp_path, capsys):
    f = tmp_path / "t.csv"
    f.write_text("t,x\n0,1\n")
    assert run_cli("analyze", f) == 2
