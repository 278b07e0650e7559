import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cpslab.cli import main
from cpslab.descriptors import load_system


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_measure_exclusion_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, _, _ = _run(["measure", "--system", "examples/exclusion.json", "--lambda", "1", "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows == [["n", "pmf"], ["0", "0.5"], ["1", "0.5"]]


def test_unknown_flag_is_usage_error(capsys):
    code, _, err = _run(["measure", "--bogus"], capsys)
    assert code == 2 and "usage" in err


def test_missing_system_shows_schema(capsys):
    code, _, err = _run(["stationarity", "--system", "no-such-system"], capsys)
    assert code == 2 and '"range"' in err and "exclusion" in err


def test_stationarity_report(tmp_path, capsys):
    rep = tmp_path / "s.json"
    assert _run(["stationarity", "--system", "exclusion", "--report", str(rep)], capsys)[0] == 0
    data = json.loads(rep.read_text())
    assert data["verdict"]["case"] == "b"
    assert data["config"]["descriptor"]["b"]["kind"] == "Exclusion"
    assert max(r["max_abs_direct"] for r in data["generator_test"]) <= 1e-10


def test_nonstationary_system_exits_one(tmp_path, capsys):
    desc = {
        "range": {"finite": 1},
        "b": {"kind": "Exclusion"},
        "kernel": {"named": "asymmetric_cycle", "sites": 4},
        "lambda": {"kind": "geometric", "params": {"r": 2.0}},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(desc))
    assert _run(["stationarity", "--system", str(path)], capsys)[0] == 1


def test_ergodicity_verdicts(capsys):
    code, out, _ = _run(["ergodicity", "--system", "linear-zero-range", "--d-set", "1,2", "--truncation", "500"], capsys)
    assert code == 0 and json.loads(out)["verdict"]["outcome"] == "Ergodic"
    code, out, _ = _run(["ergodicity", "--system", "counterexample"], capsys)
    assert json.loads(out)["verdict"]["outcome"] == "Undecidable"


def test_couple_outputs(tmp_path, capsys):
    tv, rep = tmp_path / "tv.csv", tmp_path / "q.json"
    args = ["couple", "--system", "exclusion", "--starts", "0,1", "--horizon", "500", "--replicas", "100", "--seed", "3", "--out", str(tv), "--report", str(rep)]
    assert _run(args, capsys)[0] == 0
    rows = list(csv.reader(tv.open()))
    assert rows[0] == ["n", "tv", "p_not_coupled"] and len(rows) == 502
    assert set(json.loads(rep.read_text())["quantiles"]) == {"q10", "q25", "q50", "q75", "q90"}


def test_simulate_is_reproducible(tmp_path, capsys):
    a, b, traj = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "t.csv"
    base = ["simulate", "--system", "exclusion", "--t", "1", "--replicas", "5000", "--seed", "7"]
    assert _run(base + ["--out", str(a), "--trajectory", str(traj)], capsys)[0] == 0
    assert _run(base + ["--out", str(b), "--threads", "2"], capsys)[0] == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("trajectory")
    assert da == db and da["config"]["seed"] == 7
    assert traj.read_text().startswith("time,x,y\n")


def test_dual_descriptor_roundtrip(tmp_path, capsys):
    d = tmp_path / "d.json"
    assert _run(["dual", "--system", "misanthrope-table", "--out", str(d)], capsys)[0] == 0
    assert _run(["stationarity", "--system", str(d)], capsys)[0] == 0
    dd = tmp_path / "dd.json"
    assert _run(["dual", "--system", str(d), "--out", str(dd)], capsys)[0] == 0
    back, orig = load_system(str(dd)), load_system("misanthrope-table")
    assert np.allclose(back.b.table(2), orig.b.table(2), rtol=1e-14, atol=0)
    assert np.allclose(back.kernel.rates, orig.kernel.rates, rtol=1e-14, atol=0)
    assert np.allclose(back.lam(), orig.lam(), rtol=1e-14)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "cpslab.cli", "ergodicity", "--system", "exclusion"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["verdict"]["outcome"] == "Ergodic"


def test_dual_rejects_countable(capsys):
    assert _run(["dual", "--system", "linear-zero-range"], capsys)[0] == 2


def test_counterexample_report(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert _run(["counterexample", "--kmax", "60", "--out", str(out)], capsys)[0] == 0
    data = json.loads(out.read_text())
    assert data["joint_verdict"]["consistent"] and data["config"]["kmax"] == 60


@pytest.mark.parametrize("cmd", ["measure", "stationarity", "ergodicity", "simulate", "dual", "couple", "counterexample", "selftest"])
def test_help_for_every_subcommand(cmd, capsys):
    assert _run([cmd, "--help"], capsys)[0] == 0
