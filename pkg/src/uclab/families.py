"""Seeded families of harmonic fields and coefficient perturbations used by sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .discrete_laplace import CoefficientMatrixField, assemble_dirichlet, assemble_divergence_form, solve_dirichlet
from .fields import GridDomain, ScalarField, box_domain, level_set_domain, square_domain
from .polynomials import HomogeneousPolynomial, imag_part_zn, real_part_zn


@dataclass(frozen=True)
class HarmonicSum:
    """sum_k a_k Re z^k + b_k Im z^k around a center, evaluated in closed form."""
    a: tuple[float, ...]
    b: tuple[float, ...]
    center: tuple[float, float] = (0.0, 0.0)

    def __call__(self, x, y):
        z = (np.asarray(x, dtype=float) - self.center[0]) + 1j * (np.asarray(y, dtype=float) - self.center[1])
        out = np.zeros(z.shape)
        zk = np.ones_like(z)
        for ak, bk in zip(self.a, self.b):
            out = out + ak * zk.real + bk * zk.imag
            zk = zk * z
        return out

    def gradient(self, x, y):
        # d/dx Re f = Re f', d/dy Re f = -Im f' for analytic f = sum (a_k - i b_k) z^k
        z = (np.asarray(x, dtype=float) - self.center[0]) + 1j * (np.asarray(y, dtype=float) - self.center[1])
        deriv = np.zeros(z.shape, dtype=complex)
        zk = np.ones_like(z)
        for k in range(1, len(self.a)):
            deriv = deriv + k * (self.a[k] - 1j * self.b[k]) * zk
            zk = zk * z
        return deriv.real, -deriv.imag

    @property
    def degree(self) -> int:
        nz = [k for k, (p, q) in enumerate(zip(self.a, self.b)) if p or q]
        return max(nz) if nz else 0


def homogeneous_harmonic(n: int, phase: float = 0.0) -> HarmonicSum:
    """cos(phase) Re z^n + sin(phase) Im z^n."""
    a = [0.0] * (n + 1)
    b = [0.0] * (n + 1)
    a[n] = float(np.cos(phase))
    b[n] = float(np.sin(phase)) if n else 0.0
    return HarmonicSum(tuple(a), tuple(b))


def random_harmonic_sum(rng: np.random.Generator, max_degree: int = 6, decay: float = 1.0,
                        vanishing: bool = False) -> HarmonicSum:
    k = np.arange(max_degree + 1)
    scale = decay ** (-k.astype(float))
    a = rng.normal(size=max_degree + 1) * scale
    b = rng.normal(size=max_degree + 1) * scale
    b[0] = 0.0
    if vanishing:
        a[0] = 0.0
    return HarmonicSum(tuple(float(v) for v in a), tuple(float(v) for v in b))


def as_polynomial(f: HarmonicSum, degree: int) -> HomogeneousPolynomial:
    """Degree-``degree`` part of a centered harmonic sum."""
    p = real_part_zn(degree).scale(f.a[degree])
    if degree:
        p = p + imag_part_zn(degree).scale(f.b[degree])
    return p


def random_boundary_data(rng: np.random.Generator, modes: int = 6, max_freq: float = 4.0, positive: bool = False):
    """Smooth random function of (x, y) used as Dirichlet data."""
    freqs = rng.uniform(-max_freq, max_freq, size=(modes, 2))
    phases = rng.uniform(0, 2 * np.pi, size=modes)
    amps = rng.normal(size=modes) / np.sqrt(modes)
    offset = float(np.sum(np.abs(amps))) + 0.2 if positive else 0.0

    def g(x, y):
        out = np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, offset)
        for (fx, fy), ph, am in zip(freqs, phases, amps):
            out = out + am * np.cos(fx * x + fy * y + ph)
        return out

    return g


def perturbed_coefficients(domain: GridDomain, eps: float, rng: np.random.Generator) -> CoefficientMatrixField:
    """A = I + eps * B(x) with smooth symmetric B, |B| <= 1 entrywise."""
    c = rng.uniform(-1, 1, size=(3, 3))
    w = rng.uniform(0.5, 2.0, size=(3, 2))

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        b = [c[i, 0] * np.sin(w[i, 0] * x + c[i, 1]) * np.cos(w[i, 1] * y + c[i, 2]) for i in range(3)]
        return 1.0 + eps * b[0], 0.5 * eps * b[1], 1.0 + eps * b[2]

    return CoefficientMatrixField.from_function(f, domain)


def random_solution(rng: np.random.Generator, n: int = 128, half_width: float = 1.0,
                    A: CoefficientMatrixField | None = None, positive: bool = False, **kw) -> ScalarField:
    """Discrete solution on the square [-w, w]^2 with random smooth boundary data."""
    dom = square_domain(n, -half_width, half_width)
    L = assemble_dirichlet(dom) if A is None else assemble_divergence_form(dom, A)
    return solve_dirichlet(L, random_boundary_data(rng, positive=positive, **kw))


def sample_on_box(f, lo: Sequence[float], hi: Sequence[float], h: float, **meta) -> ScalarField:
    dom = box_domain(lo, hi, h)
    return ScalarField(np.asarray(f(*dom.mesh()), dtype=float), dom, meta=dict(meta))


def random_star_domain(rng: np.random.Generator, h: float, modes: int = 4, amplitude: float = 0.25) -> GridDomain:
    """Star-shaped region r < R(theta) with a smooth random radius R around 1."""
    a = rng.normal(size=modes) * amplitude / np.sqrt(modes)
    b = rng.normal(size=modes) * amplitude / np.sqrt(modes)
    k = np.arange(2, modes + 2)

    def phi(x, y):
        th = np.arctan2(y, x)
        R = 1.0 + sum(a[i] * np.cos(k[i] * th) + b[i] * np.sin(k[i] * th) for i in range(modes))
        return np.hypot(x, y) - R

    reach = 1.0 + float(np.sum(np.abs(a) + np.abs(b))) + 2 * h
    n = int(np.ceil(reach / h))
    return level_set_domain(phi, (-n * h, -n * h), (n * h, n * h), h)
