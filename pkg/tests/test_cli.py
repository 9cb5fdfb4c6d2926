import csv
import json
import math
from pathlib import Path

import pytest

from travelwave.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def cfg(name):
    return str(CONFIGS / name)


def read_json(path):
    return json.loads(Path(path).read_text())


def test_solve_cubic(tmp_path):
    assert main(["solve", "--config", cfg("cubic.cfg"), "--out", str(tmp_path)]) == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["schema_version"] == 1
    assert summary["c_star"] == pytest.approx(-math.sqrt(2) * 0.3, abs=1e-8)
    assert summary["branch"] == "TravellingWave"
    with open(tmp_path / "profile.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["xi", "u", "du"] and len(rows) == 2049
    side = read_json(tmp_path / "profile.json")
    assert side["x1"] == "-inf" and side["x_minus1"] == "+inf"
    assert (tmp_path / "trajectory.csv").read_text().startswith("r,y\n")


def test_solve_double_well(tmp_path):
    assert main(["solve", "--config", cfg("doublewell_a15.cfg"), "--out", str(tmp_path)]) == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["branch"] == "Stationary" and summary["c_star"] == 0.0
    side = read_json(tmp_path / "profile.json")
    assert side["left_class"] == side["right_class"] == "Finite"
    assert isinstance(side["x1"], float)


def test_bad_sign_exit_code(tmp_path, capsys):
    assert main(["solve", "--config", cfg("bad_sign.cfg"), "--out", str(tmp_path)]) == 3
    assert "SignStructureViolation" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("family = cubic\ns0 = 0.3\ntol_c = -1\n")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["solve", "--out", str(tmp_path)]) == 2
    assert main(["solve", "--config", cfg("cubic.cfg"), "--tol-c", "0", "--out", str(tmp_path)]) == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    from travelwave import cli
    from travelwave.errors import NonConvergent

    def fail(*args, **kwargs):
        raise NonConvergent("no bracket")

    monkeypatch.setattr(cli, "solve_cstar", fail)
    assert main(["solve", "--config", cfg("cubic.cfg"), "--out", str(tmp_path)]) == 4
    assert "NonConvergent" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    assert main(["solve", "--config", cfg("cubic.cfg"), "--out", str(tmp_path),
                 "--samples", "64", "--tol-c", "1e-6"]) == 0
    assert len((tmp_path / "profile.csv").read_text().splitlines()) == 65
    assert abs(read_json(tmp_path / "summary.json")["tolerances"]["tol_c"] - 1e-6) < 1e-20


def test_outputs_are_byte_reproducible(tmp_path):
    for d in ("a", "b"):
        assert main(["solve", "--config", cfg("cubic.cfg"), "--out", str(tmp_path / d)]) == 0
    for name in ("summary.json", "profile.csv", "profile.json", "trajectory.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_quick(tmp_path):
    assert main(["verify", "--quick", "--out", str(tmp_path)]) == 0
    report = read_json(tmp_path / "report.json")
    assert report["aggregate"] is True
    names = [r["check_name"] for r in report["reports"]]
    assert len(names) == 12 and all(n.startswith("manufactured_") for n in names)
    assert names == sorted(names)


def test_verify_cubic(tmp_path):
    assert main(["verify", "--config", cfg("cubic.cfg"), "--out", str(tmp_path)]) == 0
    report = read_json(tmp_path / "report.json")
    names = {r["check_name"] for r in report["reports"]}
    assert {"envelope", "uniqueness_probe", "first_integral", "zero_speed_identity"} <= names


def test_verify_noisy_table(tmp_path):
    code = main(["verify", "--config", cfg("noisy_table.cfg"), "--out", str(tmp_path)])
    report = read_json(tmp_path / "report.json")
    assert any(w["kind"] == "PoorFit" for w in report["warnings"])
    env = [r for r in report["reports"] if r["check_name"] == "envelope"][0]
    assert "skipped" in env["context"]
    assert code == (0 if report["aggregate"] else 1)


def test_sweep(tmp_path):
    c = tmp_path / "sweep.cfg"
    c.write_text("family = cubic\nsweep_s0 = 0.15, 0.3\nsweep_p = 2\n")
    assert main(["sweep", "--config", str(c), "--out", str(tmp_path / "o"), "--jobs", "2"]) == 0
    index = read_json(tmp_path / "o" / "index.json")
    assert index["count"] == 2 and index["failed"] == 0
    assert [e["name"] for e in index["instances"]] == ["p=2_s0=0.15", "p=2_s0=0.3"]
    assert (tmp_path / "o" / "p=2_s0=0.3" / "summary.json").exists()


def test_sweep_isolates_failures(tmp_path):
    c = tmp_path / "sweep.cfg"
    c.write_text("family = cubic\nsweep_s0 = -0.3, 0.3\n")
    assert main(["sweep", "--config", str(c), "--out", str(tmp_path / "o")]) == 3
    index = read_json(tmp_path / "o" / "index.json")
    codes = {e["name"]: e["exit_code"] for e in index["instances"]}
    assert codes == {"s0=-0.3": 3, "s0=0.3": 0}


def test_export_plot(tmp_path):
    assert main(["export-plot", "--config", cfg("cubic.cfg"), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "plot_r_y.csv").read_text().splitlines()
    assert rows[0] == "r,y" and len(rows) == 1002
    assert (tmp_path / "plot_xi_u.csv").read_text().startswith("xi,u\n")
