import csv
import json
import os
import subprocess
import sys

import pytest

from pluridisc.cli import main
from pluridisc.config import ExperimentConfig
from pluridisc.harness import ResultRecord, canonical, payload_digest, plain, report, run

H = 1 / 32
DISC = {"type": "ClosedDisc", "center": [0, 0], "radius": 0.5}


def cfg(kind, tmp, **extra):
    m = {"kind": kind, "out": str(tmp / kind), "solver": {"h": H},
         "optimizer": {"restarts": 1, "budget": 60, "samples": 512, "search_samples": 256}}
    m.update(extra)
    return ExperimentConfig.from_dict(m)


def test_empty_set_gives_zero_field(tmp_path):
    rec = run(cfg("envelope", tmp_path, sets={"E": {"type": "Empty", "dim": 1}}, points=[0.3]))
    out = rec.outputs["sets"]["E"]
    assert out["min"] == 0.0 and out["max"] == 0.0
    assert out["points"][0]["omega"] == 0.0
    assert not rec.failures
    with open(tmp_path / "envelope" / "fields" / "envelope_E.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["value"]) == 0.0 for r in rows)


def test_run_writes_artifacts(tmp_path):
    rec = run(cfg("disc-opt", tmp_path, sets={"A": DISC}, points=[0.7]))
    root = tmp_path / "disc-opt"
    for name in ("config.json", "results.json", "payload.json", "discs/A_0.json"):
        assert (root / name).exists()
    saved = ResultRecord.from_dict(json.loads((root / "results.json").read_text()))
    assert saved.payload() == rec.payload()
    assert saved.config_hash == ExperimentConfig.load(root / "config.json").hash()
    assert 0 < rec.outputs["sets"]["A"][0]["sigma"] < 0.5


def test_disc_opt_is_deterministic(tmp_path):
    a = run(cfg("disc-opt", tmp_path / "a", sets={"A": DISC}, points=[0.7, 0.6]))
    b = run(cfg("disc-opt", tmp_path / "b", sets={"A": DISC}, points=[0.7, 0.6]))
    assert canonical(a.payload()) == canonical(b.payload())
    assert payload_digest(tmp_path / "a" / "disc-opt") == payload_digest(tmp_path / "b" / "disc-opt")


def test_boundary_and_capacity_runs(tmp_path):
    arc = {"type": "Arc", "start": 0, "end": "1/2", "closed": False}
    rec = run(cfg("boundary", tmp_path, sets={"U": arc}, points=[0, 0.5]))
    assert not rec.failures
    assert rec.outputs["sets"]["U"]["points"][0]["poisson"] == -0.5
    assert (tmp_path / "boundary" / "fields" / "rays_U.csv").exists()
    rec = run(cfg("capacity", tmp_path, sets={"A": DISC}))
    assert not rec.failures and 0.4 < rec.outputs["sets"]["A"]["value"] < 0.6


def test_plain_values():
    from fractions import Fraction
    import numpy as np
    assert plain({"a": np.float64(0.5), "b": 1 + 2j, "c": Fraction(1, 3), "d": np.arange(2),
                  "e": float("inf"), 1: np.bool_(True)}) == {
        "a": 0.5, "b": [1.0, 2.0], "c": "1/3", "d": [0, 1], "e": "inf", "1": True}


def test_report_on_empty_directory(tmp_path):
    s = report(tmp_path)
    assert s.records == 0 and s.flagged and not s.rows
    assert "PARTIAL" in (tmp_path / "summary.txt").read_text()


def test_report_on_one_record(tmp_path):
    run(cfg("capacity", tmp_path, sets={"A": DISC}))
    s = report(tmp_path)
    assert s.records == 1 and not s.flagged and not s.failed
    assert [r["row"] for r in s.rows] == ["capacity"]
    with open(tmp_path / "summary.csv") as fh:
        assert next(csv.reader(fh)) == ["row", "checks", "failed", "status"]


def test_report_flags_missing_rows(tmp_path):
    rec = ResultRecord("h", "verify", "", "", {},
                       [{"row": "closed-pluriregular", "check": "c", "passed": False}])
    os.makedirs(tmp_path / "r")
    (tmp_path / "r" / "results.json").write_text(json.dumps(rec.to_dict()))
    s = report(tmp_path)
    assert s.failed and s.flagged and "poletsky-open" in s.missing


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"kind": "capacity", "sets": {"A": DISC}, "solver": {"h": H}}))
    assert main(["capacity", "--config", str(good), "--out", str(tmp_path / "c")]) == 0
    assert "checks passed" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "capacity", "solver": {"h": -1}}))
    assert main(["capacity", "--config", str(bad)]) == 2
    assert "solver.h" in capsys.readouterr().err
    fail = tmp_path / "fail.json"
    fail.write_text(json.dumps({"kind": "envelope", "sets": {"A": DISC}, "points": [0.7],
                                "solver": {"h": H, "method": "relax", "max_iter": 2}}))
    assert main(["envelope", "--config", str(fail), "--out", str(tmp_path / "f")]) == 1
    assert main(["report", str(tmp_path / "c")]) == 0
    assert main(["report", str(tmp_path / "f")]) == 1
    assert main(["report"]) == 2


def test_cli_flags_override_config(tmp_path):
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"kind": "disc-opt", "sets": {"A": DISC}, "points": [0.7],
                             "optimizer": {"seed": 1, "restarts": 5, "budget": 40}}))
    assert main(["disc-opt", "--config", str(c), "--seed", "4", "--restarts", "0",
                 "--samples", "256", "--out", str(tmp_path / "o")]) == 0
    saved = json.loads((tmp_path / "o" / "config.json").read_text())
    assert saved["optimizer"]["seed"] == 4 and saved["optimizer"]["restarts"] == 0
    assert saved["optimizer"]["budget"] == 40 and saved["kind"] == "disc-opt"


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "pluridisc", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "verify" in out.stdout


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_boundary_rows_many_pairs(tmp_path, seed):
    c = ExperimentConfig.from_dict({
        "kind": "verify", "out": str(tmp_path), "optimizer": {"seed": seed},
        "options": {"suites": ["boundary-open-equality"], "pairs": 40}})
    rec = run(c)
    assert not rec.failures
    assert all(abs(complex(*p["x"])) < 0.9 for p in rec.outputs["boundary-open-equality"]["pairs"])
