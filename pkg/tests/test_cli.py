import json
import subprocess
import sys

import pytest

from uclab.calibration import Calibration
from uclab.cli import DEFAULTS, ConfigError, build_config, main


def _report(path):
    return json.loads((path / "report.json").read_text())


def test_passing_run_writes_report(tmp_path):
    assert main(["frequency", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["schema_version"] == "1.0"
    assert rep["subcommand"] == "frequency"
    assert rep["config"] == json.loads(json.dumps(DEFAULTS["frequency"]))
    assert rep["exit_code"] == 0 and all(c["passed"] for c in rep["checks"])
    assert (tmp_path / "frequency_n3.csv").exists()


def test_failing_exact_check_exits_one(tmp_path):
    assert main(["frequency", "--out", str(tmp_path), "--set", "tol=-1"]) == 1
    assert _report(tmp_path)["status"] == "fail"


def test_calibrated_failures_need_strict(tmp_path):
    assert main(["sublevel", "--out", str(tmp_path / "a"), "--set", "tol=0"]) == 0
    assert main(["sublevel", "--out", str(tmp_path / "b"), "--set", "tol=0", "--strict"]) == 1


@pytest.mark.parametrize("argv", [
    ["frequency", "--set", "no_such_key=1"],
    ["frequency", "--set", "tol"],
    ["remez", "--suite", "bogus"],
    ["induct", "--jobs", "0"],
    ["no-such-command"],
])
def test_configuration_errors_exit_two(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "no-such-command" else argv) == 2


def test_malformed_config_file_exits_two(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text("{not json")
    assert main(["frequency", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_config_file_and_overrides_layer():
    cfg = build_config("induct", None, ["a0=2.5"], {"J": 4})
    assert cfg["a0"] == 2.5 and cfg["J"] == 4
    with pytest.raises(ConfigError):
        build_config("induct", None, ["bogus=1"], {})


def test_config_file_keyed_by_subcommand(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"induct": {"a0": 0.5}}))
    assert build_config("induct", str(p), [], {})["a0"] == 0.5


def test_missing_calibration_exits_two(tmp_path):
    assert main(["propagate", "--calibration", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 2


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("UCLAB_OUT", str(tmp_path))
    assert main(["induct"]) == 0
    assert (tmp_path / "induct" / "report.json").exists()


def test_seeded_runs_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["remez", "--suite", "random", "--trials", "50", "--seed", "11",
                     "--out", str(tmp_path / name)]) == 0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_of_no_runs_passes(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "summary.csv").exists()


def test_report_propagates_failures(tmp_path):
    main(["frequency", "--out", str(tmp_path / "ok")])
    main(["frequency", "--out", str(tmp_path / "bad"), "--set", "tol=-1"])
    assert main(["report", str(tmp_path / "ok"), "--out", str(tmp_path / "r1")]) == 0
    assert main(["report", str(tmp_path / "ok"), str(tmp_path / "bad"), "--out", str(tmp_path / "r2")]) == 1
    assert "fail" in (tmp_path / "r2" / "summary.md").read_text()


def test_report_flags_conflicting_calibrations(tmp_path):
    for name, seed in (("a", 1), ("b", 2)):
        d = tmp_path / name
        d.mkdir()
        (d / "report.json").write_text(json.dumps({"subcommand": "propagate", "exit_code": 0, "checks": [],
                                                   "calibration": {"version": "1.0", "seed": seed}}))
    assert main(["report", str(tmp_path / "a"), str(tmp_path / "b"), "--out", str(tmp_path / "r")]) == 1
    assert "Conflicting calibration" in (tmp_path / "r" / "summary.md").read_text()
    assert main(["report", str(tmp_path / "missing"), "--out", str(tmp_path / "r")]) == 2


def test_packaged_calibration_loads():
    c = Calibration.load()
    for key in ("remez_C", "propagation_C0", "propagation_alpha", "inverse_doubling_a1", "halving_J",
                "zero_cube_K", "caccioppoli_C"):
        assert key in c.constants
    assert c.seed == 20240601
    assert 0 < c["propagation_alpha"] < 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "uclab", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
