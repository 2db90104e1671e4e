"""Command-line entry point: one subcommand per experiment.

Every run writes report.json (machine-readable checks plus the echoed config)
and its data files into the output directory.  Exit codes: 0 pass, 1 a failing
check in an enforced tier, 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import calibration as cal
from . import experiments as ex

SCHEMA_VERSION = "1.0"
OUT_ENV = "UCLAB_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS: dict[str, dict] = {
    "spectra": {"circle_n": [1, 2, 3, 4], "torus_max": 3, "disk_modes": [[0, 1], [1, 1], [2, 1], [0, 2]],
                "sphere_degrees": [1, 2, 3], "residual_tol": 1e-2,
                "bessel_zeros": [[0, 1], [0, 2], [1, 1], [2, 1], [3, 2], [5, 3]], "bessel_tol": 1e-5},
    "eig": {"domain": "disk", "h": 1 / 128, "k": 6, "seed": 0, "rel_tol": 0.01, "export": False},
    "frequency": {"degrees": [1, 2, 3, 4, 5, 6], "radii": [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4], "tol": 0.02,
                  "low_degree": 1, "high_degree": 3, "limit_radii": [1e-3, 1e3], "limit_tol": 0.1},
    "doubling": {"suite": "all", "degrees": [1, 2, 3, 4, 5, 6], "h": 1 / 256, "r": 0.25, "tol": 0.02,
                 "df_ns": list(range(1, 13)), "df_range": [0.4, 0.6], "halving_trials": 100, "J": 8},
    "three-sphere": {"trials": 100, "seed": 3, "n": 128, "r": 0.2},
    "nodal": {"domain": "square", "modes": 20, "resolutions": [128, 256], "seed": 100, "combos": 8},
    "yau": {"lams": [5, 10, 25, 50, 65, 100, 130, 170, 200, 250], "seed": 0, "points": 512,
            "slope_range": [0.45, 0.55], "density_lams": [5, 13, 25, 41, 65, 85, 113, 145],
            "density_points": 256, "band": 2.0},
    "remez": {"suite": "all", "n_max": 8, "trials": 1000, "seed": 0, "sharp_degrees": list(range(1, 11)),
              "sharp_stretch": [0.0, 0.25, 1.0], "sharp_tol": 1e-9, "sublevel_a": [0.5, 1.0, 2.0, 4.0],
              "sublevel_trials": 200},
    "polya": {"trials": 200, "n_max": 6, "a": [0.5, 1.0], "seed": 0, "rel_error": 0.01,
              "equality_degrees": [1, 2, 3, 4]},
    "sublevel": {"degrees": [3, 6], "a_grid": [0.25 * k for k in range(1, 25)], "h": 1 / 256, "tol": 0.25},
    "propagate": {"trials": 100, "seed": 7, "eps": 1e-6, "min_fraction": 0.05, "alpha_tol": 0.3},
    "induct": {"s": None, "J": 8, "d": 2, "a0": 1.0, "C_base": 1.0, "k0_max": 1000,
               "oracle_C": 1.0, "oracle_k": 20, "oracle_j": 60},
    "calibrate": {"seed": cal.CALIBRATION_SEED, "count": cal.FAMILY_SIZE, "install": False, "force": False},
}

RUNNERS = {
    "spectra": ex.run_spectra, "eig": ex.run_eig, "frequency": ex.run_frequency, "doubling": ex.run_doubling,
    "three-sphere": ex.run_three_sphere, "nodal": ex.run_nodal, "yau": ex.run_yau, "remez": ex.run_remez,
    "polya": ex.run_polya, "sublevel": ex.run_sublevel, "propagate": ex.run_propagate, "induct": ex.run_induct,
    "calibrate": ex.run_calibrate,
}
NEEDS_CALIBRATION = {"propagate"}
USES_CALIBRATION = {"propagate", "doubling"}

# statement -> subcommand, used by the aggregate report
STATEMENTS = {
    "spectra": "Model eigenfunctions on circle, torus, disk and sphere",
    "eig": "Dirichlet spectrum of grid domains (disk: j01^2)",
    "frequency": "Frequency of homogeneous harmonics and vanishing order limits",
    "doubling": "Doubling index identities, sqrt(lambda) growth, subcube halving",
    "three-sphere": "Log-convexity of H (three-sphere inequality)",
    "nodal": "Courant nodal domain bound",
    "yau": "Nodal length ~ sqrt(lambda) and zero density",
    "remez": "Remez inequality and 1D sublevel sets",
    "polya": "Area of sublevel sets of monic polynomials",
    "sublevel": "Exponential decay of sublevel sets with rate ~ 1/N",
    "propagate": "Propagation of smallness from sets of positive measure",
    "induct": "Closure of the two-parameter recursion",
    "calibrate": "Calibrate-then-freeze of unspecified constants",
}


class ConfigError(ValueError):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(command: str, config_file: str | None, overrides: list[str], flags: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS[command])
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_file}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update(data.get(command, data) if command in data else data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip()] = _parse_value(v)
    for k, v in flags.items():
        if v is not None:
            cfg[k] = v
    unknown = set(cfg) - set(DEFAULTS[command])
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    return cfg


def output_dir(command: str, explicit: str | None) -> Path:
    base = Path(explicit) if explicit else Path(os.environ.get(OUT_ENV, "uclab-runs")) / command
    base.mkdir(parents=True, exist_ok=True)
    return base


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def exit_status(checks: list[ex.Check], strict: bool) -> int:
    enforced = {"exact", "calibrated"} if strict else {"exact"}
    return EXIT_FAIL if any(not c.passed and c.tier in enforced for c in checks) else EXIT_OK


def run(command: str, cfg: dict, out: Path, jobs: int = 1, strict: bool = False,
        calibration_path: str | None = None) -> int:
    calib = None
    if command in USES_CALIBRATION:
        try:
            calib = cal.Calibration.load(calibration_path)
        except FileNotFoundError:
            if command in NEEDS_CALIBRATION or cfg.get("suite") in ("halving", "all"):
                raise
    runner = RUNNERS[command]
    t0 = time.perf_counter()
    if command in USES_CALIBRATION:
        checks = runner(cfg, out, jobs, calib)
    else:
        checks = runner(cfg, out, jobs)
    status = exit_status(checks, strict)
    report = {
        "schema_version": SCHEMA_VERSION,
        "uclab_version": __version__,
        "subcommand": command,
        "statement": STATEMENTS[command],
        "config": cfg,
        "strict": strict,
        "jobs": jobs,
        "calibration": None if calib is None else {"version": calib.version, "seed": calib.seed},
        "checks": [c.to_json() for c in checks],
        "status": "pass" if status == EXIT_OK else "fail",
        "exit_code": status,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        val = "" if c.value is None else f" value={c.value:.6g}"
        print(f"[{mark}] ({c.tier}) {c.name}{val}")
    return status


# -- aggregate report ----------------------------------------------------------------

def aggregate(run_dirs: list[str], out: Path) -> int:
    rows, versions, status = [], set(), EXIT_OK
    for d in run_dirs:
        p = Path(d) / "report.json"
        try:
            rep = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {p}: {exc}") from exc
        if rep.get("calibration"):
            versions.add((rep["calibration"]["version"], rep["calibration"]["seed"]))
        if rep.get("exit_code", 0) != 0:
            status = EXIT_FAIL
        for c in rep["checks"]:
            rows.append((rep.get("statement", ""), rep["subcommand"], c["name"], c["tier"],
                         "pass" if c["passed"] else "fail", d))
    conflict = len(versions) > 1
    if conflict:
        status = EXIT_FAIL
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["statement", "experiment", "check", "tier", "status", "run"])
        w.writerows(rows)
    lines = ["| statement | experiment | check | tier | status |", "|---|---|---|---|---|"]
    lines += [f"| {r[0]} | {r[1]} | {r[2]} | {r[3]} | {r[4]} |" for r in rows]
    if conflict:
        lines += ["", f"Conflicting calibration versions: {sorted(versions)}"]
    (out / "summary.md").write_text("\n".join(lines) + "\n")
    (out / "report.json").write_text(json.dumps({"schema_version": SCHEMA_VERSION, "runs": run_dirs,
                                                 "rows": len(rows), "calibration_conflict": conflict,
                                                 "exit_code": status}, indent=2) + "\n")
    print("\n".join(lines))
    return status


# -- argument parsing -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flat keys, or keyed by subcommand)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<subcommand>)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trial sweeps")
    p.add_argument("--strict", action="store_true", help="also fail on calibrated-tier checks")
    p.add_argument("--calibration", help="calibration file (default: the packaged one)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uclab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    flags: dict[str, list[tuple]] = {
        "spectra": [],
        "eig": [("--domain", str, "domain", ["disk", "square", "star"]), ("--h", float, "h", None),
                ("--k", int, "k", None), ("--seed", int, "seed", None)],
        "frequency": [],
        "doubling": [("--suite", str, "suite", ["identity", "df", "halving", "all"]), ("--J", int, "J", None)],
        "three-sphere": [("--trials", int, "trials", None), ("--seed", int, "seed", None)],
        "nodal": [("--domain", str, "domain", ["square", "disk", "star"]), ("--modes", int, "modes", None),
                  ("--seed", int, "seed", None)],
        "yau": [("--seed", int, "seed", None)],
        "remez": [("--suite", str, "suite", ["sharp", "random", "sublevel", "all"]),
                  ("--n-max", int, "n_max", None), ("--trials", int, "trials", None), ("--seed", int, "seed", None)],
        "polya": [("--trials", int, "trials", None), ("--n-max", int, "n_max", None), ("--seed", int, "seed", None)],
        "sublevel": [],
        "propagate": [("--trials", int, "trials", None), ("--seed", int, "seed", None), ("--eps", float, "eps", None)],
        "induct": [("--s", float, "s", None), ("--a0", float, "a0", None), ("--J", int, "J", None)],
        "calibrate": [("--seed", int, "seed", None), ("--count", int, "count", None)],
    }
    for name, opts in flags.items():
        p = sub.add_parser(name, help=STATEMENTS[name])
        _common(p)
        for flag, typ, dest, choices in opts:
            p.add_argument(flag, type=typ, dest=f"opt_{dest}", choices=choices)
        if name == "calibrate":
            p.add_argument("--install", dest="opt_install", action="store_const", const=True,
                           help="also replace the packaged calibration file")
            p.add_argument("--force", dest="opt_force", action="store_const", const=True)
    r = sub.add_parser("report", help="aggregate report.json files from run directories")
    r.add_argument("runs", nargs="*", help="run directories")
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV}/report)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "report":
            return aggregate(args.runs, output_dir("report", args.out))
        flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_")}
        cfg = build_config(args.command, args.config, args.set, flags)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = output_dir(args.command, args.out)
        return run(args.command, cfg, out, args.jobs, args.strict, args.calibration)
    except (ConfigError, FileNotFoundError, FileExistsError, KeyError, ValueError, TypeError) as exc:
        print(f"uclab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
