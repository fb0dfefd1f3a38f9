import csv
import io
import json
import subprocess
import sys

import pytest

from conehull.cli import main

BODY = json.dumps({"kind": "lp_ball", "p": 1, "dim": 3})


def _cfg(tmp_path, d):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    return str(path)


def test_sample_stdout(capsys):
    assert main(["sample", "--body", BODY, "--dist", "cone", "--count", "5", "--seed", "1"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 6 and len(rows[1]) == 3
    for r in rows[1:]:
        assert sum(abs(float(v)) for v in r) == pytest.approx(1.0)


def test_sample_file_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sample", "--body", BODY, "--dist", "uniform", "--count", "50", "--seed", "3", "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()


def test_sample_bad_body(tmp_path):
    assert main(["sample", "--body", '{"kind": "nope"}', "--count", "2", "--seed", "0"]) == 2
    assert main(["sample", "--body", str(tmp_path / "missing.json"), "--count", "2", "--seed", "0"]) == 2


def test_experiment_exit_codes(tmp_path, capsys):
    good = {"families": ["l1"], "dims": [3], "n_schedule": ["2n", "3n"], "trials": 3, "trend_bootstrap": 20,
            "output_csv": str(tmp_path / "o.csv")}
    assert main(["experiment", "--config", _cfg(tmp_path, good)]) == 0
    assert "trend" in capsys.readouterr().out
    assert main(["experiment", "--config", _cfg(tmp_path, {**good, "n_schedule": []})]) == 2
    assert main(["experiment", "--config", str(tmp_path / "missing.json")]) == 2


def test_volume_radius_cli(tmp_path, capsys):
    cfg = {"families": ["l1"], "dims": [3], "trials": 3, "output_csv": str(tmp_path / "v.csv")}
    assert main(["volume-radius", "--config", _cfg(tmp_path, cfg)]) == 0
    assert json.loads(capsys.readouterr().out.splitlines()[0])["pass"]


def test_verify_cli(tmp_path, capsys):
    cfg = {"sample_count": 2000, "bootstrap": 10, "dims": [2], "thetas_per_body": 1, "certificate_thetas": 2,
           "polytope_instances": 2}
    path = _cfg(tmp_path, cfg)
    assert main(["verify", "--config", path, "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["summary"]["pass"]
    capsys.readouterr()
    assert main(["verify", "--config", _cfg(tmp_path, {**cfg, "psi2_constant": 0.3})]) == 1
    assert main(["verify", "--config", _cfg(tmp_path, {**cfg, "bad_key": 1})]) == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "conehull.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "volume-radius" in out.stdout
