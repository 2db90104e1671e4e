"""Frequency function, doubling indices and growth experiments.

For a center ``c`` and ``x`` measured from ``c`` (dimension d = 2):

    H(r) = r^{1-d} int_{|x|=r} mu |u|^2 ds,    mu = (A x, x) / |x|^2
    I(r) = r^{1-d} int_{|x|<r} (A grad u, grad u) dx
    N(r) = r I(r) / H(r)

Circles use a periodic trapezoid rule (512 angles by default); the disk
integral uses Gauss-Legendre in the radius times the same angular rule, so a
polynomial field is integrated exactly.  Grid fields are interpolated
(cubic spline); the reported error estimate adds the 256 vs 512 angle
difference to the linear vs cubic interpolation difference, and every
monotonicity or convexity check allows three times that estimate.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator

from .discrete_laplace import CoefficientMatrixField
from .fields import DomainError, ScalarField, box_domain
from .model_spectra import torus_eigenfunction, circle_eigenfunction, ModelEigenfunction

ANGLES = 512
RADIAL_NODES = 48
TOL_FACTOR = 3.0
H_FLOOR = 1e-300


# -- field access ------------------------------------------------------------

class _Sampler:
    """Uniform (value, gradient) access to grid fields and closed forms."""

    def __init__(self, u, method: str = "cubic"):
        self.u = u
        self.method = method
        if isinstance(u, ScalarField):
            if u.ndim != 2:
                raise ValueError("growth analysis runs on 2D fields")
            xs, ys = u.domain.axes()
            self.bounds = (xs[0], xs[-1], ys[0], ys[-1])
            if method == "cubic":
                self._val = RectBivariateSpline(xs, ys, u.values, kx=3, ky=3)
                gx, gy = u.gradient()
                self._gx = RectBivariateSpline(xs, ys, gx, kx=3, ky=3)
                self._gy = RectBivariateSpline(xs, ys, gy, kx=3, ky=3)
            else:
                self._val = RegularGridInterpolator((xs, ys), u.values)
                gx, gy = u.gradient()
                self._gx = RegularGridInterpolator((xs, ys), gx)
                self._gy = RegularGridInterpolator((xs, ys), gy)
        elif callable(u):
            self.bounds = None
        else:
            raise TypeError("expected a ScalarField or a callable f(x, y)")

    @property
    def is_grid(self) -> bool:
        return self.bounds is not None

    def check(self, center, radius: float) -> None:
        if self.bounds is None:
            return
        x0, x1, y0, y1 = self.bounds
        cx, cy = center
        if cx - radius < x0 or cx + radius > x1 or cy - radius < y0 or cy + radius > y1:
            raise DomainError(f"radius {radius:g} around {tuple(center)} leaves the sampled grid")

    def _grid_eval(self, fn, x, y):
        if self.method == "cubic":
            return fn(x.ravel(), y.ravel(), grid=False).reshape(x.shape)
        return fn(np.stack([x.ravel(), y.ravel()], axis=-1)).reshape(x.shape)

    def value(self, x, y):
        if self.is_grid:
            return self._grid_eval(self._val, x, y)
        return np.asarray(self.u(x, y), dtype=float)

    def grad(self, x, y):
        if self.is_grid:
            return self._grid_eval(self._gx, x, y), self._grid_eval(self._gy, x, y)
        g = getattr(self.u, "gradient", None)
        if g is not None:
            return g(x, y)
        step = 1e-6 * max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
        gx = (self.u(x + step, y) - self.u(x - step, y)) / (2 * step)
        gy = (self.u(x, y + step) - self.u(x, y - step)) / (2 * step)
        return gx, gy


def _coeff_fn(A) -> Callable | None:
    if A is None:
        return None
    if isinstance(A, CoefficientMatrixField):
        return A.at
    return A


# -- frequency ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialGrowthProfile:
    center: tuple[float, float]
    radii: np.ndarray
    H: np.ndarray
    I: np.ndarray
    N: np.ndarray
    H_err: np.ndarray
    N_err: np.ndarray
    weights: str = "identity"
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def index(self, r: float) -> int:
        hits = np.flatnonzero(np.isclose(self.radii, r, rtol=1e-12, atol=1e-14))
        if hits.size == 0:
            raise KeyError(f"radius {r} not in profile")
        return int(hits[0])

    def log_derivative_frequency(self) -> np.ndarray:
        """r H'(r) / (2 H(r)) by differentiating log H against log r."""
        if len(self.radii) < 3:
            raise ValueError("need at least three radii")
        return 0.5 * np.gradient(np.log(self.H), np.log(self.radii))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "H", "I", "N", "H_err", "N_err"])
            for row in zip(self.radii, self.H, self.I, self.N, self.H_err, self.N_err):
                w.writerow([repr(float(v)) for v in row])

    def summary(self) -> dict:
        return {"center": list(self.center), "radii": self.radii.tolist(), "N": self.N.tolist(),
                "N_err": self.N_err.tolist(), "weights": self.weights, "truncated": self.truncated}


def _circle_points(center, r: float, m: int):
    th = 2 * np.pi * np.arange(m) / m
    return center[0] + r * np.cos(th), center[1] + r * np.sin(th), np.cos(th), np.sin(th)


def _H_I(s: _Sampler, A, center, r: float, m: int, nr: int) -> tuple[float, float]:
    x, y, cx, cy = _circle_points(center, r, m)
    u = s.value(x, y)
    if A is None:
        mu = 1.0
    else:
        a11, a12, a22 = A(x, y)
        mu = a11 * cx * cx + 2 * a12 * cx * cy + a22 * cy * cy
    H = float(np.sum(mu * u * u)) * 2 * np.pi / m

    xi, wi = np.polynomial.legendre.leggauss(nr)
    rho = 0.5 * r * (xi + 1)
    wr = 0.5 * r * wi * rho
    th = 2 * np.pi * np.arange(m) / m
    X = center[0] + rho[:, None] * np.cos(th)[None, :]
    Y = center[1] + rho[:, None] * np.sin(th)[None, :]
    gx, gy = s.grad(X, Y)
    if A is None:
        dens = gx * gx + gy * gy
    else:
        a11, a12, a22 = A(X, Y)
        dens = a11 * gx * gx + 2 * a12 * gx * gy + a22 * gy * gy
    I = float(np.sum(wr[:, None] * dens)) * 2 * np.pi / m / r
    return H, I


def frequency_profile(u, center: Sequence[float], radii: Sequence[float], A=None,
                      angles: int = ANGLES, radial_nodes: int = RADIAL_NODES) -> RadialGrowthProfile:
    """H, I and N = rI/H on a list of radii around ``center``.

    ``A`` must equal the identity at ``center`` (see :func:`change_of_variables`);
    ``None`` means A = I.  Radii where H underflows are dropped and flagged.
    """
    center = (float(center[0]), float(center[1]))
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and increasing")
    Afn = _coeff_fn(A)
    if Afn is not None:
        a11, a12, a22 = (float(np.asarray(v).ravel()[0]) for v in Afn(np.array([center[0]]), np.array([center[1]])))
        if max(abs(a11 - 1), abs(a12), abs(a22 - 1)) > 1e-9:
            raise ValueError("A(center) must be the identity; normalize with change_of_variables")
    s = _Sampler(u)
    s.check(center, float(radii[-1]))
    lin = _Sampler(u, "linear") if s.is_grid else None

    rows = []
    truncated = False
    for r in radii:
        H, I = _H_I(s, Afn, center, r, angles, radial_nodes)
        if H < H_FLOOR:
            truncated = True
            break
        Hc, Ic = _H_I(s, Afn, center, r, angles // 2, max(radial_nodes // 2, 4))
        N = r * I / H
        Nc = r * Ic / Hc if Hc > 0 else N
        h_err = abs(H - Hc)
        n_err = abs(N - Nc)
        if lin is not None:
            Hl, Il = _H_I(lin, Afn, center, r, angles, radial_nodes)
            h_err += abs(H - Hl)
            n_err += abs(N - (r * Il / Hl if Hl > 0 else N))
        rows.append((r, H, I, N, h_err / H, n_err))
    if not rows:
        raise DomainError("u vanishes on every circle (H below 1e-300)")
    arr = np.array(rows)
    return RadialGrowthProfile(center, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5],
                               "identity" if Afn is None else "(A x, x)/|x|^2", truncated)


@dataclass(frozen=True)
class MonotoneCheck:
    passed: bool
    worst: float
    index: int | None
    C: float


def check_frequency_monotone(profile: RadialGrowthProfile, C: float = 0.0,
                             tol: np.ndarray | float | None = None) -> MonotoneCheck:
    """e^{C r_i} N(r_i) <= e^{C r_{i+1}} N(r_{i+1}) + tol at every step."""
    if C < 0:
        raise ValueError("C must be >= 0")
    g = np.exp(C * profile.radii) * profile.N
    if tol is None:
        tol = TOL_FACTOR * (profile.N_err[:-1] + profile.N_err[1:]) * np.exp(C * profile.radii[1:])
    drop = g[:-1] - g[1:] - tol
    if drop.size == 0:
        return MonotoneCheck(True, 0.0, None, C)
    i = int(np.argmax(drop))
    worst = float(drop[i])
    return MonotoneCheck(worst <= 0, worst, None if worst <= 0 else i, C)


def smallest_monotone_constant(profile: RadialGrowthProfile, C_max: float = 1e3, tol: float = 1e-6) -> float:
    """Smallest C >= 0 making e^{Cr}N(r) monotone (bisection); inf if none below C_max."""
    if check_frequency_monotone(profile, 0.0).passed:
        return 0.0
    if not check_frequency_monotone(profile, C_max).passed:
        return float("inf")
    lo, hi = 0.0, C_max
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if check_frequency_monotone(profile, mid).passed:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class GrowthBracket:
    lower: float
    ratio: float
    upper: float
    passed: bool


def growth_bracket(profile: RadialGrowthProfile, r: float, R: float) -> GrowthBracket:
    """(R/r)^{2N(r)} <= H(R)/H(r) <= (R/r)^{2N(R)}, with the quadrature budget."""
    i, j = profile.index(r), profile.index(R)
    if R < r:
        raise ValueError("need r <= R")
    q = math.log(R / r)
    lower = math.exp(2 * profile.N[i] * q)
    upper = math.exp(2 * profile.N[j] * q)
    ratio = float(profile.H[j] / profile.H[i])
    slack_lo = TOL_FACTOR * (2 * profile.N_err[i] * q + profile.H_err[i] + profile.H_err[j])
    slack_hi = TOL_FACTOR * (2 * profile.N_err[j] * q + profile.H_err[i] + profile.H_err[j])
    ok = math.log(ratio) >= math.log(lower) - slack_lo - 1e-12 and math.log(ratio) <= math.log(upper) + slack_hi + 1e-12
    return GrowthBracket(lower, ratio, upper, bool(ok))


# -- three spheres -----------------------------------------------------------

@dataclass(frozen=True)
class ThreeSphere:
    H: tuple[float, float, float]
    defect: float
    alpha: float
    C: float
    tolerance: float
    passed: bool


def three_sphere_check(u, center: Sequence[float], r: float, A=None) -> ThreeSphere:
    """Log-convexity at (r, 2r, 4r).

    ``defect = H(2r)^2 / (H(r) H(4r)) - 1``; with A = I the check passes iff
    ``defect <= 3 * err``.  ``alpha`` is the exponent giving equality in
    ``H(2r) <= C H(r)^alpha H(4r)^(1-alpha)`` with C = 1.
    """
    prof = frequency_profile(u, center, [r, 2 * r, 4 * r], A=A)
    if prof.truncated:
        raise DomainError("u vanishes on one of the circles")
    H1, H2, H4 = (float(v) for v in prof.H)
    defect = H2 * H2 / (H1 * H4) - 1.0
    tol = TOL_FACTOR * float(2 * prof.H_err[1] + prof.H_err[0] + prof.H_err[2])
    denom = math.log(H4 / H1)
    alpha = math.log(H4 / H2) / denom if denom != 0 else 0.5
    if A is None:
        passed = defect <= tol
    else:
        passed = 0.0 < alpha < 1.0
    return ThreeSphere((H1, H2, H4), defect, alpha, 1.0, tol, bool(passed))


# -- doubling ----------------------------------------------------------------

@dataclass(frozen=True)
class DoublingRecord:
    kind: str
    center: tuple[float, ...]
    size: float
    value: float
    meta: dict = field(default_factory=dict)


def _box_slices(u: ScalarField, center, half: float) -> tuple[slice, ...]:
    sl = []
    for ax, c in zip(u.domain.axes(), center):
        lo = np.searchsorted(ax, c - half - 1e-9 * u.h, side="left")
        hi = np.searchsorted(ax, c + half + 1e-9 * u.h, side="right")
        if c - half < ax[0] - 1e-9 * u.h or c + half > ax[-1] + 1e-9 * u.h:
            raise DomainError(f"box of half-width {half:g} at {tuple(center)} leaves the grid")
        sl.append(slice(int(lo), int(hi)))
    return tuple(sl)


def _sup_box(u: ScalarField, center, half: float, require: bool = False) -> float:
    sl = _box_slices(u, center, half)
    d = u.defined[sl]
    if require and not d.all():
        raise DomainError("box contains undefined nodes")
    v = np.abs(u.values[sl])[d]
    if v.size == 0:
        raise DomainError("box contains no defined nodes")
    return float(v.max())


def _sup_ball(u: ScalarField, center, r: float) -> float:
    sl = _box_slices(u, center, r)
    pts = np.meshgrid(*[ax[s] for ax, s in zip(u.domain.axes(), sl)], indexing="ij")
    inside = sum((p - c) ** 2 for p, c in zip(pts, center)) <= (r + 1e-9 * u.h) ** 2
    d = u.defined[sl]
    if not d[inside].all():
        raise DomainError("ball reaches undefined nodes")
    return float(np.abs(u.values[sl][inside]).max())


def _log_ratio(big: float, small: float) -> float:
    if small == 0.0:
        return 0.0 if big == 0.0 else float("inf")
    return math.log(big / small)


def doubling_ball(u: ScalarField, center: Sequence[float], r: float) -> DoublingRecord:
    """log(max_{2B}|u| / max_B|u|) over grid nodes in the closed balls."""
    val = _log_ratio(_sup_ball(u, center, 2 * r), _sup_ball(u, center, r))
    return DoublingRecord("ball", tuple(float(c) for c in center), float(r), val)


def _cube_value(u: ScalarField, center, side: float) -> float:
    return _log_ratio(_sup_box(u, center, side, require=True), _sup_box(u, center, side / 2))


def doubling_cube(u: ScalarField, center: Sequence[float], side: float, depth: int = 4,
                  jitter: int = 64, seed: int = 0) -> DoublingRecord:
    """sup over subcubes q of Q of log(max_{2q}|u| / max_q|u|).

    The family is the dyadic subcubes down to ``depth`` levels plus ``jitter``
    random cubes per level; the result is a lower bound for the sup over all
    subcubes.  ``meta['self']`` holds the value for q = Q.
    """
    center = tuple(float(c) for c in center)
    _sup_box(u, center, side, require=True)
    rng = np.random.default_rng(seed)
    best = 0.0
    count = 0
    self_val = _cube_value(u, center, side)
    d = len(center)
    for level in range(depth + 1):
        k = 2**level
        s = side / k
        offs = (np.arange(k) + 0.5) * s - side / 2
        for idx in np.ndindex(*(k,) * d):
            c = tuple(center[i] + offs[idx[i]] for i in range(d))
            best = max(best, _cube_value(u, c, s))
            count += 1
        for _ in range(jitter if level else 0):
            s_j = s * rng.uniform(1.0, 2.0)
            c = tuple(center[i] + rng.uniform(-(side - s_j) / 2, (side - s_j) / 2) for i in range(d))
            best = max(best, _cube_value(u, c, s_j))
            count += 1
    return DoublingRecord("cube", center, float(side), float(best),
                          {"family_size": count, "depth": depth, "jitter": jitter, "seed": seed, "self": self_val})


def fit_inverse_doubling(records: Sequence[DoublingRecord]) -> tuple[float, float]:
    """(a1, a2) with log(max_{2Q}/max_Q) >= a1 * N(Q) - a2 on every record.

    a1 is the least-squares slope; a2 is the smallest offset making it hold.
    """
    N = np.array([r.value for r in records])
    L = np.array([r.meta["self"] for r in records])
    if len(N) < 2 or np.ptp(N) == 0:
        return 1.0, float(max(0.0, np.max(N - L)))
    a1 = max(float(np.polyfit(N, L, 1)[0]), 0.0)
    return a1, float(max(0.0, np.max(a1 * N - L)))


# -- propagation chains --------------------------------------------------------

@dataclass(frozen=True)
class ChainResult:
    gamma: float
    C: float
    chain_lengths: list
    direct_holds: bool
    sup_K: float
    sup_B: float
    sup_Omega: float


def _chain_centers(start, end, rho):
    dist = math.dist(start, end)
    steps = max(1, math.ceil(dist / rho))
    return [tuple(s + (e - s) * t / steps for s, e in zip(start, end)) for t in range(steps + 1)]


def chain_propagation(u: ScalarField, B: tuple[Sequence[float], float], K: tuple[Sequence[float], float],
                      k: int = 8, rho: float | None = None) -> ChainResult:
    """Carry smallness from ball B to ball K through a chain of equal balls.

    Consecutive centers are at most rho apart (so B_{j+1} lies in 2B_j), the
    first ball sits inside B and k*B_j stays in the defined region.  Each link
    contributes its measured three-ball exponent gamma_j in
    sup_{2B_j} = sup_{B_j}^gamma_j sup_{4B_j}^(1 - gamma_j); gamma = prod gamma_j
    along the worst chain, and C = 1.
    """
    (cB, rB), (cK, rK) = B, K
    sup_omega = u.sup()
    sup_B = _sup_ball(u, cB, rB)
    sup_K = _sup_ball(u, cK, rK)
    if math.dist(cK, cB) + rK <= rB + 1e-12:
        return ChainResult(1.0, 1.0, [0], sup_K <= sup_B * (1 + 1e-12), sup_K, sup_B, sup_omega)
    rho = min(rB, rK) if rho is None else rho
    # cover K with balls of radius rho
    offs = np.arange(-rK, rK + 1e-12, rho / math.sqrt(2))
    cover = [(cK[0] + a, cK[1] + b) for a in offs for b in offs if math.hypot(a, b) <= rK + rho]
    gamma = 1.0
    lengths = []
    for end in cover:
        centers = _chain_centers(cB, end, rho)
        g = 1.0
        for c in centers[:-1]:
            if not u.covers(u.ball(c, k * rho), c, k * rho):
                raise DomainError(f"k*B_j at {c} leaves the domain; pick a smaller rho")
            s1, s2, s4 = (_sup_ball(u, c, m * rho) for m in (1, 2, 4))
            if s1 == s4:
                gj = 1.0
            else:
                gj = math.log(s2 / s4) / math.log(s1 / s4) if s1 > 0 else 0.0
            g *= min(max(gj, 0.0), 1.0)
        gamma = min(gamma, g)
        lengths.append(len(centers))
    holds = sup_K <= sup_B**gamma * sup_omega ** (1 - gamma) * (1 + 1e-12) if sup_omega > 0 else True
    return ChainResult(gamma, 1.0, lengths, bool(holds), sup_K, sup_B, sup_omega)


# -- eigenfunction doubling sweeps --------------------------------------------

@dataclass(frozen=True)
class DFScan:
    lams: np.ndarray
    N_max: np.ndarray
    C: float
    c0: float
    residuals: np.ndarray
    exponent: float
    prefactor: float

    def to_json(self) -> dict:
        return {"lambda": self.lams.tolist(), "N_max": self.N_max.tolist(), "C": self.C, "c0": self.c0,
                "exponent": self.exponent, "prefactor": self.prefactor, "residuals": self.residuals.tolist()}


def _ball_points(dim: int, r: float, spacing: float) -> np.ndarray:
    k = int(math.ceil(r / spacing))
    g = spacing * np.arange(-k, k + 1)
    pts = np.stack(np.meshgrid(*([g] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    pts = pts[np.sum(pts**2, axis=1) <= r * r * (1 + 1e-12)]
    # make sure the axis extremes are sampled exactly
    ext = np.concatenate([np.eye(dim) * r, -np.eye(dim) * r])
    return np.concatenate([pts, ext])


def lift_doubling(phi: ModelEigenfunction, centers: Sequence[Sequence[float]], r: float,
                  spacing: float | None = None) -> float:
    """Max over the centers of the doubling index of phi(x) e^{sqrt(lam) t} on (x, t) balls."""
    dim = len(phi.axes) + 1
    spacing = r / 16 if spacing is None else spacing
    p1 = _ball_points(dim, r, spacing)
    p2 = _ball_points(dim, 2 * r, spacing)
    k = math.sqrt(phi.eigenvalue)
    best = 0.0
    for c in centers:
        c = np.asarray(c, dtype=float)

        def sup(pts):
            q = pts + c
            return float(np.max(np.abs(phi.func(*q[:, :-1].T) * np.exp(k * q[:, -1]))))

        best = max(best, _log_ratio(sup(p2), sup(p1)))
    return best


def df_doubling_scan(ns: Sequence[int], family: str = "torus", radius: float | None = None,
                     centers_per_axis: int = 4) -> DFScan:
    """Doubling of lifted eigenfunctions against sqrt(lambda).

    Torus modes use cos(n x) on [-pi, pi)^2; circle modes use cos(n theta).
    The ball radius is a quarter period (pi/2) unless given.  Fits
    N_max = C sqrt(lam) + c0 and a free power law N_max = p * lam^e.
    """
    radius = math.pi / 2 if radius is None else radius
    lams, vals = [], []
    grid = -math.pi + 2 * math.pi * (np.arange(centers_per_axis) + 0.5) / centers_per_axis
    grid = np.unique(np.concatenate([grid, [0.0]]))
    for n in ns:
        if family == "torus":
            phi = torus_eigenfunction((n, 0), points=8)
            centers = [(a, b, 0.0) for a in grid for b in grid]
        elif family == "circle":
            phi = circle_eigenfunction(n, points=8)
            centers = [(a, 0.0) for a in grid]
        else:
            raise ValueError(f"unknown family {family!r}")
        lams.append(phi.eigenvalue)
        vals.append(lift_doubling(phi, centers, radius) if phi.eigenvalue > 0 else 0.0)
    lams = np.array(lams)
    vals = np.array(vals)
    X = np.column_stack([np.sqrt(lams), np.ones_like(lams)])
    (C, c0), *_ = np.linalg.lstsq(X, vals, rcond=None)
    resid = vals - X @ np.array([C, c0])
    pos = (lams > 0) & (vals > 0)
    if pos.sum() >= 2:
        e, logp = np.polyfit(np.log(lams[pos]), np.log(vals[pos]), 1)
    else:
        e, logp = float("nan"), float("nan")
    return DFScan(lams, vals, float(C), float(c0), resid, float(e), float(math.exp(logp)))


# -- subcube halving -----------------------------------------------------------

@dataclass(frozen=True)
class PartitionResult:
    N_min: float
    argmin: tuple[float, ...]
    N_Q: float
    N_q_min: float
    halving: bool
    N_half: float
    scaling_holds: bool
    K: int


def min_doubling_partition(u: ScalarField, center: Sequence[float], side: float, K: int = 8,
                           depth: int = 4, sub_depth: int = 2, jitter: int = 16, seed: int = 0) -> PartitionResult:
    """Split Q into K^d subcubes and compare their doubling indices with Q's.

    N_min is the smallest log(max_{2q}/max_q); halving reports whether some
    subcube has cube index at most N(Q)/2; scaling_holds checks
    N_f(Q/2) >= (K/8) N_min on the computed values.
    """
    if K < 8:
        raise ValueError("K must be >= 8")
    center = tuple(float(c) for c in center)
    d = len(center)
    s = side / K
    offs = (np.arange(K) + 0.5) * s - side / 2
    subs = []
    for idx in np.ndindex(*(K,) * d):
        c = tuple(center[i] + offs[idx[i]] for i in range(d))
        subs.append((c, _cube_value(u, c, s)))
    c_min, N_min = min(subs, key=lambda t: t[1])
    NQ = doubling_cube(u, center, side, depth=depth, jitter=jitter, seed=seed).value
    # cube index of each subcube, starting from the smallest simple ratio
    best_q = float("inf")
    for c, _ in sorted(subs, key=lambda t: t[1]):
        best_q = min(best_q, doubling_cube(u, c, s, depth=sub_depth, jitter=0).value)
        if best_q <= NQ / 2:
            break
    N_half = _cube_value(u, center, side / 2)
    return PartitionResult(float(N_min), c_min, float(NQ), float(best_q), bool(best_q <= NQ / 2),
                           float(N_half), bool(N_half >= (K / 8) * N_min - 1e-12), K)


# -- affine normalization -------------------------------------------------------

def change_of_variables(u: ScalarField, A: CoefficientMatrixField, x0: Sequence[float],
                        half_width: float | None = None, h: float | None = None
                        ) -> tuple[ScalarField, CoefficientMatrixField]:
    """(u~, A~) with u~(y) = u(x0 + S y), S = A(x0)^{1/2}, A~(y) = S^{-1} A(x0 + S y) S^{-1}.

    u solves div(A grad u) = 0 iff u~ solves div(A~ grad u~) = 0, and A~(0) = I.
    The new field is resampled bilinearly on a box of the given half-width.
    """
    x0 = np.asarray(x0, dtype=float)
    a11, a12, a22 = (float(np.asarray(v).ravel()[0]) for v in A.at(np.array([x0[0]]), np.array([x0[1]])))
    S = np.real(scipy.linalg.sqrtm(np.array([[a11, a12], [a12, a22]])))
    S = 0.5 * (S + S.T)
    Sinv = np.linalg.inv(S)
    xs, ys = u.domain.axes()
    room = min(x0[0] - xs[0], xs[-1] - x0[0], x0[1] - ys[0], ys[-1] - x0[1])
    reach = float(np.abs(S).sum(axis=1).max())
    if half_width is None:
        half_width = room / reach
    if half_width * reach > room + 1e-12:
        raise DomainError("transformed box leaves the data")
    h = u.h if h is None else h
    dom = box_domain((-half_width, -half_width), (half_width, half_width), h)
    Y1, Y2 = dom.mesh()
    X1 = x0[0] + S[0, 0] * Y1 + S[0, 1] * Y2
    X2 = x0[1] + S[1, 0] * Y1 + S[1, 1] * Y2
    pts = np.stack([np.clip(X1, xs[0], xs[-1]), np.clip(X2, ys[0], ys[-1])], axis=-1)
    vals = u.interpolator("linear")(pts)
    new_u = ScalarField(vals, dom, meta={**u.meta, "transform": S.tolist(), "x0": x0.tolist()})

    def coeff(y1, y2):
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        b11, b12, b22 = A.at(x0[0] + S[0, 0] * y1 + S[0, 1] * y2, x0[1] + S[1, 0] * y1 + S[1, 1] * y2)
        M = np.stack([np.stack([b11, b12], -1), np.stack([b12, b22], -1)], -2)
        T = Sinv @ M @ Sinv
        return T[..., 0, 0], 0.5 * (T[..., 0, 1] + T[..., 1, 0]), T[..., 1, 1]

    return new_u, CoefficientMatrixField.from_function(coeff, dom)


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True))
