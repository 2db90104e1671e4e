"""Closed-form eigenfunctions on the circle, torus, sphere and unit disk, and the lift.

Sign convention: an eigenfunction satisfies ``Lap(phi) + lam * phi = 0``, so
``lam >= 0``.  Each :class:`ModelEigenfunction` keeps the closed form and a
sample on its natural grid; :func:`eigen_residual` applies the matching
second-order finite-difference Laplacian to that sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bessel import bessel_j, bessel_zero
from .fields import GridDomain, ScalarField, disk_domain
from .polynomials import HomogeneousPolynomial

DOMAINS = ("circle", "torus", "sphere", "disk")


@dataclass(frozen=True, eq=False)
class ModelEigenfunction:
    domain: str
    mode: dict
    eigenvalue: float
    func: Callable
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.eigenvalue < 0:
            raise ValueError("eigenvalue must be >= 0")

    def field(self) -> ScalarField:
        """Periodic grid field (circle/torus) for nodal and doubling analysis."""
        if self.domain not in ("circle", "torus"):
            raise ValueError("use cartesian() for the disk; sphere fields are not planar grids")
        h = self.axes[0][1] - self.axes[0][0]
        dom = GridDomain(np.ones(self.values.shape, dtype=bool), h, tuple(a[0] for a in self.axes),
                         (True,) * self.values.ndim)
        return ScalarField(self.values, dom, meta={"domain": self.domain, "eigenvalue": self.eigenvalue,
                                                   "mode": self.mode})

    def cartesian(self, h: float) -> ScalarField:
        """Disk eigenfunction resampled on a Cartesian disk mask (closed form, not interpolation)."""
        if self.domain != "disk":
            raise ValueError("cartesian resampling applies to disk eigenfunctions")
        dom = disk_domain(h)
        x, y = dom.mesh()
        vals = np.where(dom.mask, self.func(x, y), 0.0)
        return ScalarField(vals, dom, dom.mask | dom.ring(),
                           meta={"domain": "disk", "eigenvalue": self.eigenvalue, "mode": self.mode})

    def inner(self, other: "ModelEigenfunction") -> float:
        if self.weights is None or self.values.shape != other.values.shape:
            raise ValueError("inner product needs matching quadrature grids")
        return float(np.sum(self.weights * self.values * other.values))


def _periodic_axis(points: int) -> np.ndarray:
    return -math.pi + 2 * math.pi * np.arange(points) / points


def circle_eigenfunction(n: int, kind: str = "cos", points: int = 256) -> ModelEigenfunction:
    """cos(n theta) or sin(n theta) on [0, 2 pi)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    trig = {"cos": np.cos, "sin": np.sin}[kind]
    theta = 2 * math.pi * np.arange(points) / points

    def func(t):
        return trig(n * np.asarray(t))

    w = np.full(points, 2 * math.pi / points)
    return ModelEigenfunction("circle", {"n": n, "kind": kind}, float(n * n), func, (theta,), func(theta), w)


def torus_eigenfunction(n: Sequence[int], points: int = 128, kind: str = "cos") -> ModelEigenfunction:
    """Real (cos) or imaginary (sin) part of exp(i n.x) on [-pi, pi)^d."""
    n = tuple(int(v) for v in n)
    if len(n) not in (1, 2):
        raise ValueError("torus dimension must be 1 or 2")
    trig = {"cos": np.cos, "sin": np.sin}[kind]
    axes = tuple(_periodic_axis(points) for _ in n)

    def func(*xs):
        return trig(sum(k * np.asarray(x) for k, x in zip(n, xs)))

    mesh = np.meshgrid(*axes, indexing="ij")
    w = np.full(mesh[0].shape, (2 * math.pi / points) ** len(n))
    return ModelEigenfunction("torus", {"n": list(n), "kind": kind}, float(sum(k * k for k in n)),
                              func, axes, func(*mesh), w)


def torus_combination(terms: Sequence[tuple[float, Sequence[int], str]], points: int = 128) -> ModelEigenfunction:
    """Sum of cos/sin modes sharing one eigenvalue on the 2-torus."""
    lams = {sum(k * k for k in n) for _, n, _ in terms}
    if len(lams) != 1:
        raise ValueError(f"modes have different eigenvalues {sorted(lams)}")
    axes = (_periodic_axis(points), _periodic_axis(points))
    trig = {"cos": np.cos, "sin": np.sin}

    def func(x, y):
        return sum(c * trig[kind](n[0] * np.asarray(x) + n[1] * np.asarray(y)) for c, n, kind in terms)

    mesh = np.meshgrid(*axes, indexing="ij")
    w = np.full(mesh[0].shape, (2 * math.pi / points) ** 2)
    mode = {"terms": [[float(c), list(n), kind] for c, n, kind in terms]}
    return ModelEigenfunction("torus", mode, float(lams.pop()), func, axes, func(*mesh), w)


def disk_eigenfunction(n: int, k: int, a: float = 1.0, b: float = 0.0,
                       nr: int = 64, ntheta: int = 128) -> ModelEigenfunction:
    """J_n(j_{n,k} r)(a cos n theta + b sin n theta) on the unit disk, polar grid."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    if a == 0 and b == 0:
        raise ValueError("(a, b) must not both vanish")
    j = bessel_zero(n, k)

    def func(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        radial = bessel_j(n, np.minimum(r, 1.0) * j).reshape(r.shape)
        return np.where(r <= 1.0, radial * (a * np.cos(n * th) + b * np.sin(n * th)), 0.0)

    r = np.linspace(0.0, 1.0, nr + 1)
    theta = 2 * math.pi * np.arange(ntheta) / ntheta
    R, T = np.meshgrid(r, theta, indexing="ij")
    vals = bessel_j(n, R.ravel() * j).reshape(R.shape) * (a * np.cos(n * T) + b * np.sin(n * T))
    wr = np.full(nr + 1, 1.0 / nr)
    wr[[0, -1]] *= 0.5
    w = (wr * r)[:, None] * np.full(ntheta, 2 * math.pi / ntheta)[None, :]
    mode = {"n": n, "k": k, "a": a, "b": b, "j": j}
    return ModelEigenfunction("disk", mode, j * j, func, (r, theta), vals, w)


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Weights for integral_0^pi f(theta) sin(theta) d theta at theta_k = k pi / n."""
    theta = math.pi * np.arange(n + 1) / n
    w = np.empty(n + 1)
    for k in range(n + 1):
        s = 0.0
        for j in range(1, n // 2 + 1):
            bj = 1.0 if 2 * j == n else 2.0
            s += bj / (4 * j * j - 1) * math.cos(2 * j * theta[k])
        ck = 1.0 if k in (0, n) else 2.0
        w[k] = ck / n * (1 - s)
    return w


def sphere_harmonic(H: HomogeneousPolynomial, ntheta: int = 64, nphi: int = 128,
                    tol: float = 1e-12) -> ModelEigenfunction:
    """Restriction of a harmonic polynomial in three variables to the unit sphere."""
    if H.dim != 3:
        raise ValueError("sphere harmonics need a polynomial in three variables")
    if not H.is_harmonic(tol=0 if H.exact else tol):
        raise ValueError("polynomial is not harmonic; run harmonic_decompose first")
    theta = math.pi * np.arange(ntheta + 1) / ntheta
    phi = 2 * math.pi * np.arange(nphi) / nphi

    def func(t, p):
        t = np.asarray(t)
        p = np.asarray(p)
        return H(np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t))

    T, P = np.meshgrid(theta, phi, indexing="ij")
    w = clenshaw_curtis_weights(ntheta)[:, None] * np.full(nphi, 2 * math.pi / nphi)[None, :]
    n = H.degree
    # S^2 is a 2-manifold: lam = n(n + 2 - 1)
    return ModelEigenfunction("sphere", {"degree": n, "coeffs": {str(k): str(v) for k, v in H.coeffs.items()}},
                              float(n * (n + 1)), func, (theta, phi), func(T, P), w)


# -- discrete residuals --------------------------------------------------

def _periodic_second(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(u, -1, axis) - 2 * u + np.roll(u, 1, axis)) / h**2


def discrete_laplacian(eig: ModelEigenfunction) -> tuple[np.ndarray, np.ndarray]:
    """(Lap_h phi, interior selector) on the eigenfunction's own grid."""
    u = eig.values
    if eig.domain in ("circle", "torus"):
        h = eig.axes[0][1] - eig.axes[0][0]
        lap = sum(_periodic_second(u, h, ax) for ax in range(u.ndim))
        return lap, np.ones(u.shape, dtype=bool)
    if eig.domain == "disk":
        r, theta = eig.axes
        dr = r[1] - r[0]
        dt = theta[1] - theta[0]
        lap = np.zeros_like(u)
        rr = r[1:-1, None]
        urr = (u[2:] - 2 * u[1:-1] + u[:-2]) / dr**2
        ur = (u[2:] - u[:-2]) / (2 * dr)
        utt = _periodic_second(u[1:-1], dt, 1)
        lap[1:-1] = urr + ur / rr + utt / rr**2
        sel = np.zeros(u.shape, dtype=bool)
        sel[1:-1] = True
        return lap, sel
    theta, phi = eig.axes
    dt = theta[1] - theta[0]
    dp = phi[1] - phi[0]
    s_mid = np.sin(0.5 * (theta[1:] + theta[:-1]))[:, None]
    flux = s_mid * (u[1:] - u[:-1]) / dt
    st = np.sin(theta[1:-1])[:, None]
    lap = np.zeros_like(u)
    lap[1:-1] = (flux[1:] - flux[:-1]) / (dt * st) + _periodic_second(u[1:-1], dp, 1) / st**2
    sel = np.zeros(u.shape, dtype=bool)
    sel[1:-1] = True
    return lap, sel


def eigen_residual(eig: ModelEigenfunction) -> float:
    """Relative L2 error of Lap_h phi + lam phi on the interior sample."""
    lap, sel = discrete_laplacian(eig)
    res = lap + eig.eigenvalue * eig.values
    w = eig.weights if eig.weights is not None else np.ones_like(eig.values)
    num = np.sqrt(np.sum((w * res**2)[sel]))
    den = np.sqrt(np.sum((w * eig.values**2)[sel]))
    if den == 0:
        return float(num)
    return float(num / den / max(eig.eigenvalue, 1.0))


@dataclass(frozen=True, eq=False)
class LiftedSolution:
    base: ModelEigenfunction
    eigenvalue: float
    t: np.ndarray
    values: np.ndarray

    def __call__(self, *coords):
        *xs, t = coords
        return self.base.func(*xs) * np.exp(math.sqrt(self.eigenvalue) * np.asarray(t))


def lift(phi: ModelEigenfunction, t_range: tuple[float, float] = (-1.0, 1.0), nt: int = 65) -> LiftedSolution:
    """h(x, t) = phi(x) exp(sqrt(lam) t), harmonic one dimension up."""
    lo, hi = t_range
    if not hi > lo:
        raise ValueError("empty t range")
    t = np.linspace(lo, hi, nt)
    growth = np.exp(math.sqrt(phi.eigenvalue) * t)
    values = phi.values[..., None] * growth.reshape((1,) * phi.values.ndim + (nt,))
    return LiftedSolution(phi, phi.eigenvalue, t, values)
