"""Experiment runners behind the command-line subcommands.

Each runner takes a flat config dict and an output directory, writes its data
files and returns a list of Check records.  Checks carry a tier: "exact" for
analytic identities with a quadrature budget, "calibrated" for regressions
against frozen constants or empirical fits.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.special

from . import calibration as cal
from .bessel import bessel_zero
from .discrete_laplace import assemble_dirichlet, eigen_report, eigensolve
from .families import (homogeneous_harmonic, random_harmonic_sum, random_solution, random_star_domain,
                       sample_on_box)
from .fields import box_domain, disk_domain, square_domain
from .growth import df_doubling_scan, doubling_ball, doubling_cube, frequency_profile, min_doubling_partition, three_sphere_check
from .model_spectra import (circle_eigenfunction, disk_eigenfunction, eigen_residual, sphere_harmonic,
                            torus_eigenfunction)
from .nodal import courant_table, extract_zero_set, torus_random_wave, yau_scaling_fit, zero_density_radius
from .polynomials import harmonic_decompose, random_polynomial as random_homogeneous
from .remez import (ComplexMonicPolynomial, IntervalUnion, chebyshev, polya_check, random_monic,
                    random_polynomial, sublevel_measure_1d, verify_remez)
from .smallness import (RecursionParams, decay_fit, induction_engine, propagation_constant, recursion_oracle,
                        remez_solutions_check, simulate_recursion, sublevel_measure, verify_certificate)

TIERS = ("exact", "calibrated")


@dataclass
class Check:
    name: str
    tier: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}")
        self.passed = bool(self.passed)
        if self.value is not None:
            self.value = float(self.value)
        if self.threshold is not None:
            self.threshold = float(self.threshold)

    def to_json(self) -> dict:
        return asdict(self)


# -- small utilities -------------------------------------------------------------

def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map, fanned out over a process pool when jobs > 1."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def trial_seeds(seed: int, n: int) -> list[int]:
    """Per-trial seeds that do not depend on the worker count."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def svg_lineplot(path: Path, series: dict, xlabel: str, ylabel: str, logx: bool = False,
                 size: tuple[int, int] = (480, 320)) -> None:
    """Minimal SVG polyline plot of named (x, y) series."""
    W, H = size
    pad = 48
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    tx = np.log10 if logx else (lambda v: np.asarray(v, dtype=float))
    x0, x1 = float(np.min(tx(xs))), float(np.max(tx(xs)))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x, y):
        return pad + (tx(x) - x0) / (x1 - x0) * (W - 2 * pad), H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
           f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="12" y="{H / 2}" font-size="12" transform="rotate(-90 12 {H / 2})">{ylabel}</text>',
           f'<text x="{pad}" y="{H - pad + 14}" font-size="10">{x0:.3g}</text>',
           f'<text x="{W - pad}" y="{H - pad + 14}" font-size="10" text-anchor="end">{x1:.3g}</text>',
           f'<text x="{pad - 4}" y="{H - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
           f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>']
    for i, (name, (x, y)) in enumerate(series.items()):
        X, Y = px(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
        c = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{W - pad + 4}" y="{pad + 14 * (i + 1)}" font-size="10" fill="{c}">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def make_domain(kind: str, h: float, seed: int = 0):
    if kind == "square":
        return square_domain(int(round(1 / h)))
    if kind == "disk":
        return disk_domain(h)
    if kind == "star":
        return random_star_domain(np.random.default_rng(seed), h)
    raise ValueError(f"unknown domain {kind!r}")


# -- model spectra and discrete eigenproblems -----------------------------------------

def run_spectra(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    rows, checks = [], []
    tol = cfg["residual_tol"]
    models = [("circle", f"n={n}", circle_eigenfunction(n)) for n in cfg["circle_n"]]
    models += [("torus", f"n=({p},{q})", torus_eigenfunction((p, q)))
               for p in range(cfg["torus_max"] + 1) for q in range(cfg["torus_max"] + 1) if p + q > 0]
    models += [("disk", f"n={n},k={k}", disk_eigenfunction(n, k)) for n, k in cfg["disk_modes"]]
    for d in cfg["sphere_degrees"]:
        H = harmonic_decompose(random_homogeneous(d, 3, np.random.default_rng(d)))[0]
        models += [("sphere", f"l={d}", sphere_harmonic(H))]
    worst = 0.0
    for fam, label, phi in models:
        res = eigen_residual(phi) if phi.eigenvalue > 0 else 0.0
        worst = max(worst, res)
        rows.append((fam, label, phi.eigenvalue, res))
    write_csv(out / "model_spectra.csv", ["family", "mode", "lambda", "residual"], rows)
    checks.append(Check("model eigenfunction residuals", "exact", worst <= tol, worst, tol))

    zrows, zworst = [], 0.0
    for n, k in cfg["bessel_zeros"]:
        ours = bessel_zero(n, k)
        ref = float(scipy.special.jn_zeros(n, k)[-1])
        zworst = max(zworst, abs(ours - ref))
        zrows.append((n, k, ours, ref))
    write_csv(out / "bessel_zeros.csv", ["n", "k", "series_bisection", "reference"], zrows)
    checks.append(Check("Bessel zeros against reference", "exact", zworst <= cfg["bessel_tol"], zworst, cfg["bessel_tol"]))
    return checks


def run_eig(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    dom = make_domain(cfg["domain"], cfg["h"], cfg["seed"])
    L = assemble_dirichlet(dom)
    pairs = eigensolve(L, cfg["k"])
    eigen_report(pairs, out / "eigenpairs.json")
    write_csv(out / "eigenvalues.csv", ["k", "lambda", "residual"],
              [(i + 1, p.eigenvalue, p.residual) for i, p in enumerate(pairs)])
    if cfg.get("export"):
        L.to_matrix_market(out / "operator.mtx")
    checks = []
    if cfg["domain"] == "disk":
        j01 = bessel_zero(0, 1)
        err = abs(pairs[0].eigenvalue - j01**2) / j01**2
        checks.append(Check("disk first eigenvalue vs j01^2", "exact", err <= cfg["rel_tol"], err, cfg["rel_tol"],
                            {"lambda1": pairs[0].eigenvalue, "j01": j01}))
    elif cfg["domain"] == "square":
        exact = sorted(math.pi**2 * (p * p + q * q) for p in range(1, 8) for q in range(1, 8))[: cfg["k"]]
        err = max(abs(p.eigenvalue - e) / e for p, e in zip(pairs, exact))
        checks.append(Check("square eigenvalues vs separable oracle", "exact", err <= cfg["rel_tol"], err, cfg["rel_tol"]))
    worst = max(p.residual for p in pairs)
    checks.append(Check("eigenpair residuals", "exact", worst <= 1e-8, worst, 1e-8))
    return checks


# -- growth -----------------------------------------------------------------------------

def run_frequency(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    radii = np.asarray(cfg["radii"], dtype=float)
    checks, series, worst = [], {}, 0.0
    for n in cfg["degrees"]:
        prof = frequency_profile(homogeneous_harmonic(n, 0.3), (0.0, 0.0), radii)
        prof.to_csv(out / f"frequency_n{n}.csv")
        worst = max(worst, float(np.max(np.abs(prof.N - n))))
        series[f"n={n}"] = (prof.radii, prof.N)
    checks.append(Check("frequency of homogeneous harmonics equals degree", "exact", worst <= cfg["tol"], worst, cfg["tol"]))
    svg_lineplot(out / "frequency.svg", series, "r", "N(r)")

    l, Lg = cfg["low_degree"], cfg["high_degree"]
    a = [0.0] * (Lg + 1)
    a[l], a[Lg] = 1.0, 1.0
    f = type(homogeneous_harmonic(1))(tuple(a), tuple([0.0] * (Lg + 1)))
    wide = np.geomspace(*cfg["limit_radii"], 9)
    prof = frequency_profile(f, (0.0, 0.0), wide)
    prof.to_csv(out / "frequency_vanishing_order.csv")
    svg_lineplot(out / "frequency_vanishing_order.svg", {"p_l + p_L": (wide, prof.N)}, "r", "N(r)", logx=True)
    err = max(abs(prof.N[0] - l), abs(prof.N[-1] - Lg))
    checks.append(Check("vanishing-order limits of N(r)", "exact", err <= cfg["limit_tol"], err, cfg["limit_tol"],
                        {"N_small": float(prof.N[0]), "N_large": float(prof.N[-1])}))
    return checks


def _doubling_identity(n: int, h: float, r: float) -> float:
    u = sample_on_box(homogeneous_harmonic(n), (-1.0, -1.0), (1.0, 1.0), h)
    return doubling_ball(u, (0.0, 0.0), r).value


def run_doubling(cfg: dict, out: Path, jobs: int = 1, calib: cal.Calibration | None = None) -> list[Check]:
    suite = cfg["suite"]
    checks = []
    if suite in ("identity", "all"):
        vals = pmap(_IdentityTask(cfg["h"], cfg["r"]), list(cfg["degrees"]), jobs)
        errs = [abs(v - n * math.log(2)) for n, v in zip(cfg["degrees"], vals)]
        write_csv(out / "doubling_identity.csv", ["n", "N", "n_log2"],
                  [(n, v, n * math.log(2)) for n, v in zip(cfg["degrees"], vals)])
        checks.append(Check("ball doubling of degree-n harmonic equals n log 2", "exact",
                            max(errs) <= cfg["tol"], max(errs), cfg["tol"]))
    if suite in ("df", "all"):
        scan = df_doubling_scan(cfg["df_ns"])
        write_csv(out / "df_scan.csv", ["lambda", "N_max", "residual"], zip(scan.lams, scan.N_max, scan.residuals))
        svg_lineplot(out / "df_scan.svg", {"N_max": (np.sqrt(scan.lams), scan.N_max)}, "sqrt(lambda)", "max doubling")
        lo, hi = cfg["df_range"]
        checks.append(Check("lifted eigenfunction doubling exponent", "calibrated", lo <= scan.exponent <= hi,
                            scan.exponent, hi, {"C": scan.C, "c0": scan.c0, "range": [lo, hi]}))
    if suite in ("halving", "all"):
        if calib is None:
            raise FileNotFoundError("the halving suite needs a calibration file")
        J = int(cfg.get("J") or 8)
        fields = cal.harmonic_family(calib.seed, cfg["halving_trials"])
        results = [min_doubling_partition(u, cal.CENTER, cal.SIDE, K=J) for u in fields]
        write_csv(out / "halving.csv", ["trial", "N_Q", "N_q_min", "halving"],
                  [(i, r.N_Q, r.N_q_min, int(r.halving)) for i, r in enumerate(results)])
        fails = sum(not r.halving for r in results)
        checks.append(Check(f"subcube halving at J = {J}", "calibrated", fails == 0, fails, 0,
                            {"trials": len(results), "calibrated_J": calib["halving_J"]}))
    return checks


@dataclass(frozen=True)
class _IdentityTask:
    h: float
    r: float

    def __call__(self, n: int) -> float:
        return _doubling_identity(n, self.h, self.r)


@dataclass(frozen=True)
class _ThreeSphereTask:
    n: int
    r: float

    def __call__(self, seed: int) -> tuple[float, float, bool]:
        u = random_solution(np.random.default_rng(seed), n=self.n)
        t = three_sphere_check(u, (0.0, 0.0), self.r)
        return t.defect, t.tolerance, t.passed


def run_three_sphere(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    seeds = trial_seeds(cfg["seed"], cfg["trials"])
    res = pmap(_ThreeSphereTask(cfg["n"], cfg["r"]), seeds, jobs)
    write_csv(out / "three_sphere.csv", ["trial", "defect", "tolerance", "passed"],
              [(i, d, t, int(p)) for i, (d, t, p) in enumerate(res)])
    fails = sum(not p for _, _, p in res)
    worst = max(d - t for d, t, _ in res)
    return [Check("log-convexity of H over random harmonic fields", "exact", fails == 0, fails, 0,
                  {"trials": len(res), "worst_defect_minus_tol": worst})]


# -- nodal geometry ---------------------------------------------------------------

def run_nodal(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    tables = []
    for n in cfg["resolutions"]:
        dom = make_domain(cfg["domain"], 1.0 / n, cfg["seed"])
        T = courant_table(dom, cfg["modes"], combos=cfg["combos"], seed=cfg["seed"])
        T.to_csv(out / f"courant_{cfg['domain']}_{n}.csv")
        tables.append(T)
    ok = all(T.passed for T in tables)
    same = all(np.array_equal(tables[0].counts, T.counts) for T in tables[1:])
    worst = max(float(np.max(T.counts - np.arange(1, len(T.counts) + 1))) for T in tables)
    return [Check(f"Courant bound on {cfg['domain']}", "exact", ok, worst, 0.0,
                  {"counts": [T.counts.tolist() for T in tables]}),
            Check(f"nodal counts stable across resolutions on {cfg['domain']}", "calibrated", same,
                  detail={"resolutions": list(cfg["resolutions"])})]


def run_yau(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    fit = yau_scaling_fit(cfg["lams"], "torus", seed=cfg["seed"], points=cfg["points"])
    write_csv(out / "yau.csv", ["lambda", "length", "length_over_sqrt_lambda"],
              zip(fit.lams, fit.lengths, fit.lengths / np.sqrt(fit.lams)))
    svg_lineplot(out / "yau.svg", {"length": (fit.lams, fit.lengths)}, "lambda", "nodal length", logx=True)
    lo, hi = cfg["slope_range"]
    rng = np.random.default_rng(cfg["seed"] + 1)
    prods = []
    for lam in cfg["density_lams"]:
        phi = torus_random_wave(lam, rng, cfg["density_points"])
        prods.append(zero_density_radius(phi) * math.sqrt(lam))
    write_csv(out / "zero_density.csv", ["lambda", "max_dist_sqrt_lambda"], zip(cfg["density_lams"], prods))
    band = max(prods) / min(prods)
    u = torus_random_wave(cfg["lams"][-1], np.random.default_rng(cfg["seed"]), cfg["points"]).field()
    extract_zero_set(u).to_svg(out / "nodal_set.svg")
    return [Check("nodal length slope against lambda", "calibrated", lo <= fit.slope <= hi, fit.slope, hi,
                  {"range": [lo, hi], "C1": fit.C1, "C2": fit.C2}),
            Check("zero-density product band", "calibrated", band <= cfg["band"], band, cfg["band"])]


# -- polynomial inequalities -------------------------------------------------------------

def random_interval_union(rng: np.random.Generator, I: tuple[float, float], pieces: int) -> IntervalUnion:
    lo, hi = I
    cuts = np.sort(rng.uniform(lo, hi, size=2 * pieces))
    return IntervalUnion(tuple((float(a), float(b)) for a, b in zip(cuts[::2], cuts[1::2]) if b > a))


@dataclass(frozen=True)
class _RemezTask:
    n_max: int

    def __call__(self, seed: int) -> tuple[int, float, float, bool]:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, self.n_max + 1))
        P = random_polynomial(n, rng)
        I = (-1.0, float(rng.uniform(-0.5, 3.0)))
        E = random_interval_union(rng, I, int(rng.integers(1, 5)))
        c = verify_remez(P, E, I)
        return n, c.ratio, c.bound, c.passed


@dataclass(frozen=True)
class _SublevelTask:
    n_max: int
    a_values: tuple

    def __call__(self, seed: int) -> list[tuple[int, float, float, float, bool]]:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, self.n_max + 1))
        P = random_polynomial(n, rng)
        out = []
        for a in self.a_values:
            s = sublevel_measure_1d(P, (-1.0, 1.0), a)
            out.append((n, a, s.measure, s.bound, s.passed))
        return out


def run_remez(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    suite = cfg["suite"]
    checks = []
    if suite in ("sharp", "all"):
        worst, rows = 0.0, []
        for n in cfg["sharp_degrees"]:
            for t in cfg["sharp_stretch"]:
                c = verify_remez(chebyshev(n), IntervalUnion(((-1.0, 1.0),)), (-1.0, 1.0 + 2 * t))
                err = abs(c.ratio - c.sharp) / c.sharp
                worst = max(worst, err)
                rows.append((n, t, c.ratio, c.sharp))
        write_csv(out / "remez_sharp.csv", ["n", "stretch", "ratio", "T_n"], rows)
        checks.append(Check("Chebyshev polynomials attain the sharp bound", "exact", worst <= cfg["sharp_tol"],
                            worst, cfg["sharp_tol"]))
    if suite in ("random", "all"):
        res = pmap(_RemezTask(cfg["n_max"]), trial_seeds(cfg["seed"], cfg["trials"]), jobs)
        write_csv(out / "remez_random.csv", ["trial", "n", "ratio", "bound", "passed"],
                  [(i, *r[:3], int(r[3])) for i, r in enumerate(res)])
        fails = sum(not r[3] for r in res)
        checks.append(Check("Remez bound on random polynomials and sets", "exact", fails == 0, fails, 0,
                            {"trials": len(res), "max_ratio_over_bound": max(r[1] / r[2] for r in res)}))
    if suite in ("sublevel", "all"):
        res = pmap(_SublevelTask(cfg["n_max"], tuple(cfg["sublevel_a"])),
                   trial_seeds(cfg["seed"] + 1, cfg["sublevel_trials"]), jobs)
        flat = [r for rs in res for r in rs]
        write_csv(out / "remez_sublevel.csv", ["n", "a", "measure", "bound", "passed"],
                  [(*r[:4], int(r[4])) for r in flat])
        fails = sum(not r[4] for r in flat)
        checks.append(Check("1D sublevel measure bound", "exact", fails == 0, fails, 0, {"cases": len(flat)}))
    return checks


@dataclass(frozen=True)
class _PolyaTask:
    n_max: int
    a_values: tuple
    rel_error: float

    def __call__(self, seed: int) -> list[tuple[int, float, float, float, bool]]:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, self.n_max + 1))
        p = random_monic(n, rng)
        return [(n, a, c.area.inner, c.bound, c.passed)
                for a in self.a_values for c in [polya_check(p, a, self.rel_error)]]


def run_polya(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    checks, rows, ok = [], [], True
    for n in cfg["equality_degrees"]:
        p = ComplexMonicPolynomial.from_roots([0.0] * n)
        for a in cfg["a"]:
            c = polya_check(p, a, cfg["rel_error"])
            inside = c.area.inner <= c.bound <= c.area.outer
            ok &= inside
            rows.append((n, a, c.area.inner, c.area.estimate, c.area.outer, c.bound))
    write_csv(out / "polya_equality.csv", ["n", "a", "inner", "estimate", "outer", "bound"], rows)
    checks.append(Check("z^n attains the area bound within pixel error", "exact", ok))
    res = pmap(_PolyaTask(cfg["n_max"], tuple(cfg["a"]), cfg["rel_error"]), trial_seeds(cfg["seed"], cfg["trials"]), jobs)
    flat = [r for rs in res for r in rs]
    write_csv(out / "polya_random.csv", ["n", "a", "inner", "bound", "passed"], [(*r[:4], int(r[4])) for r in flat])
    fails = sum(not r[4] for r in flat)
    checks.append(Check("area bound on random monic polynomials", "exact", fails == 0, fails, 0,
                        {"trials": len(res), "cases": len(flat), "max_inner_over_bound": max(r[2] / r[3] for r in flat)}))
    return checks


# -- smallness -----------------------------------------------------------------------

def run_sublevel(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    checks = []
    h = cfg["h"]
    line = sample_on_box(lambda x: x, (0.0,), (1.0,), h)
    m = sublevel_measure(line, (0.5,), 1.0, 1.0).m
    err = abs(m - math.exp(-1))
    checks.append(Check("linear sublevel fraction equals e^-a", "exact", err <= 2 * h, err, 2 * h))
    a_grid = np.asarray(cfg["a_grid"], dtype=float)
    n1, n2 = cfg["degrees"]
    fits = {}
    rows = []
    for n in (n1, n2):
        u = sample_on_box(homogeneous_harmonic(n), (-1.0, -1.0), (1.0, 1.0), h)
        f = decay_fit(u, (0.0, 0.0), 2.0, a_grid, N=1.0)
        fits[n] = f
        rows.append((n, f.beta, f.C, f.r2, f.used))
    write_csv(out / "decay_fit.csv", ["n", "beta", "C", "r2", "used"], rows)
    ratio = fits[n2].beta / fits[n1].beta
    target = n1 / n2
    rel = abs(ratio - target) / target
    checks.append(Check("decay rate scales inversely with the doubling index", "calibrated", rel <= cfg["tol"], rel,
                        cfg["tol"], {"ratio": ratio, "target": target}))
    r2 = min(f.r2 for f in fits.values())
    checks.append(Check("sublevel decay is exponential", "calibrated", r2 >= 0.9, r2, 0.9))
    return checks


@dataclass(frozen=True)
class _PropagationTrial:
    eps: float
    min_fraction: float
    C0: float
    alpha: float
    C0_der: float
    alpha_der: float
    remez_C: float

    def __call__(self, item) -> dict:
        seed, kind = item
        rng = np.random.default_rng(seed)
        f = random_harmonic_sum(rng)
        u = sample_on_box(f, (-1.0, -1.0), (1.0, 1.0), cal.FIELD_H)
        E = cal.random_mask(u, rng, kind, min_fraction=self.min_fraction)
        v = cal.scaled_to_eps(u, E, self.eps)
        Q = v.cube(cal.CENTER, cal.SIDE) & v.defined
        frac = float((E & Q).sum() / Q.sum())
        main = propagation_constant(v, E, Q, v.defined, self.eps, self.C0, self.alpha)
        der = propagation_constant(v, E, Q, v.defined, self.eps, self.C0_der, self.alpha_der)
        N = doubling_cube(u, cal.CENTER, cal.SIDE).value
        rl = remez_solutions_check(u, E, cal.CENTER, cal.SIDE, N, self.remez_C)
        return {"kind": kind, "fraction": frac, "max_K": main.max_K, "sup_Omega": main.sup_Omega,
                "bound": main.bound, "passed": main.passed, "derived_passed": der.passed, "remez_passed": rl.passed,
                "N": N}


def run_propagate(cfg: dict, out: Path, jobs: int = 1, calib: cal.Calibration | None = None) -> list[Check]:
    if calib is None:
        raise FileNotFoundError("propagate needs a calibration file")
    seeds = trial_seeds(cfg["seed"], cfg["trials"])
    kinds = [cal.MASK_KINDS[i % len(cal.MASK_KINDS)] for i in range(len(seeds))]
    task = _PropagationTrial(cfg["eps"], cfg["min_fraction"], calib["propagation_C0"], calib["propagation_alpha"],
                             calib["derived_C0"], calib["derived_alpha"], calib["remez_C"])
    res = pmap(task, list(zip(seeds, kinds)), jobs)
    write_csv(out / "propagation.csv", ["trial", "mask", "fraction", "max_K", "sup_Omega", "bound", "passed",
                                        "derived_passed", "remez_passed"],
              [(i, r["kind"], r["fraction"], r["max_K"], r["sup_Omega"], r["bound"], int(r["passed"]),
                int(r["derived_passed"]), int(r["remez_passed"])) for i, r in enumerate(res)])
    fails = sum(not r["passed"] for r in res)
    dfails = sum(not r["derived_passed"] for r in res)
    rfails = sum(not r["remez_passed"] for r in res)
    a_hat, a_der = calib["propagation_alpha"], calib["derived_alpha"]
    rel = abs(a_der - a_hat) / a_hat
    return [Check("propagation of smallness at frozen (C0, alpha)", "calibrated", fails == 0, fails, 0,
                  {"trials": len(res), "C0": calib["propagation_C0"], "alpha": a_hat}),
            Check("propagation at the derived (C0, alpha)", "calibrated", dfails == 0, dfails, 0),
            Check("Remez-type bound for solutions at frozen C", "calibrated", rfails == 0, rfails, 0),
            Check("derived alpha matches fitted alpha", "calibrated", rel <= cfg["alpha_tol"], rel, cfg["alpha_tol"],
                  {"alpha_fitted": a_hat, "alpha_derived": a_der})]


def run_induct(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    if cfg.get("s") is not None:
        params = RecursionParams(cfg["s"], cfg["a0"], C_base=cfg["C_base"], k0_max=cfg["k0_max"])
    else:
        params = RecursionParams.from_J(cfg["J"], cfg["d"], a0=cfg["a0"], C_base=cfg["C_base"], k0_max=cfg["k0_max"])
    cert = induction_engine(params)
    (out / "certificate.json").write_text(json.dumps(cert.to_json(), indent=2, sort_keys=True) + "\n")
    sim_ok, sim_worst = simulate_recursion(cert)
    table = recursion_oracle(cfg["oracle_C"], cfg["oracle_k"], cfg["oracle_j"])
    write_csv(out / "recursion_table.csv", ["k"] + [f"j{j}" for j in range(table.m.shape[1])],
              [(k, *row) for k, row in enumerate(table.m)])
    return [Check("certified beta is positive", "exact", cert.beta > 0, cert.beta, 0.0,
                  {"k0": cert.k0, "log_C": cert.log_C, "s": cert.s, "beta_critical": math.log(1 / cert.s) / cert.a0}),
            Check("certificate replays", "exact", verify_certificate(cert), detail={"trace_hash": cert.trace_hash}),
            Check("bound dominates the simulated recursion", "exact", sim_ok, sim_worst, 0.0),
            Check("recursion table under C' e^-j", "exact", table.holds, table.C_prime, None)]


def run_calibrate(cfg: dict, out: Path, jobs: int = 1) -> list[Check]:
    c = cal.calibrate(cfg["seed"], cfg["count"])
    c.save(out / "calibration.json")
    if cfg.get("install"):
        target = cal.default_path()
        if target.exists() and not cfg.get("force"):
            raise FileExistsError(f"{target} exists; pass force to replace the frozen calibration")
        c.save(target)
    return [Check("derived propagation pair passes on the calibration family", "calibrated",
                  c.diagnostics["derived_pair_passes"]),
            Check("finite Remez constant", "calibrated", math.isfinite(c["remez_C"]), c["remez_C"])]
