"""Homogeneous polynomials in d variables and the harmonic decomposition.

Coefficients are stored per multi-index.  When every coefficient is an int or
``Fraction`` the arithmetic stays exact; otherwise it runs in floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np


def multi_indices(n: int, d: int) -> list[tuple[int, ...]]:
    """All exponent tuples with |alpha| = n, in descending lexicographic order."""
    if d == 1:
        return [(n,)]
    out = []
    for first in range(n, -1, -1):
        out.extend((first,) + rest for rest in multi_indices(n - first, d - 1))
    return out


@dataclass(frozen=True, eq=False)
class HomogeneousPolynomial:
    degree: int
    dim: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for alpha, c in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or min(alpha) < 0:
                raise ValueError(f"bad multi-index {alpha} for dimension {self.dim}")
            if sum(alpha) != self.degree:
                raise ValueError(f"term {alpha} is not of degree {self.degree}")
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        object.__setattr__(self, "coeffs", {a: c for a, c in clean.items() if c != 0})

    @classmethod
    def zero(cls, degree: int, dim: int) -> "HomogeneousPolynomial":
        return cls(degree, dim, {})

    @classmethod
    def from_terms(cls, terms: dict) -> "HomogeneousPolynomial":
        alphas = list(terms)
        if not alphas:
            raise ValueError("empty term map; use zero()")
        degrees = {sum(a) for a in alphas}
        if len(degrees) != 1:
            raise ValueError(f"polynomial is not homogeneous (degrees {sorted(degrees)})")
        return cls(degrees.pop(), len(alphas[0]), dict(terms))

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Rational) for c in self.coeffs.values())

    def coefficient(self, alpha) -> float:
        return self.coeffs.get(tuple(alpha), 0)

    def vector(self) -> list:
        return [self.coefficient(a) for a in multi_indices(self.degree, self.dim)]

    def __call__(self, *xs):
        xs = [np.asarray(x, dtype=float) for x in xs]
        if len(xs) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates")
        out = np.zeros(np.broadcast(*xs).shape)
        for alpha, c in self.coeffs.items():
            term = np.full(out.shape, float(c))
            for x, a in zip(xs, alpha):
                if a:
                    term = term * x**a
            out = out + term
        return out

    def __add__(self, other: "HomogeneousPolynomial") -> "HomogeneousPolynomial":
        self._compatible(other)
        merged = dict(self.coeffs)
        for a, c in other.coeffs.items():
            merged[a] = merged.get(a, 0) + c
        return HomogeneousPolynomial(self.degree, self.dim, merged)

    def __sub__(self, other: "HomogeneousPolynomial") -> "HomogeneousPolynomial":
        return self + other.scale(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        return (self.degree, self.dim) == (other.degree, other.dim) and self.coeffs == other.coeffs

    def _compatible(self, other):
        if (self.degree, self.dim) != (other.degree, other.dim):
            raise ValueError("polynomials live in different spaces")

    def scale(self, s) -> "HomogeneousPolynomial":
        return HomogeneousPolynomial(self.degree, self.dim, {a: s * c for a, c in self.coeffs.items()})

    def times_r2(self) -> "HomogeneousPolynomial":
        """Multiply by |x|^2."""
        out: dict = {}
        for alpha, c in self.coeffs.items():
            for i in range(self.dim):
                beta = list(alpha)
                beta[i] += 2
                beta = tuple(beta)
                out[beta] = out.get(beta, 0) + c
        return HomogeneousPolynomial(self.degree + 2, self.dim, out)

    def laplacian(self) -> "HomogeneousPolynomial":
        if self.degree < 2:
            return HomogeneousPolynomial.zero(max(self.degree - 2, 0), self.dim)
        out: dict = {}
        for alpha, c in self.coeffs.items():
            for i, a in enumerate(alpha):
                if a >= 2:
                    beta = list(alpha)
                    beta[i] -= 2
                    beta = tuple(beta)
                    out[beta] = out.get(beta, 0) + c * a * (a - 1)
        return HomogeneousPolynomial(self.degree - 2, self.dim, out)

    def is_harmonic(self, tol: float = 0.0) -> bool:
        lap = self.laplacian()
        return all(abs(c) <= tol for c in lap.coeffs.values())

    def apolar(self, other: "HomogeneousPolynomial"):
        """The product [P, Q] = P(D)Q = sum alpha! P_alpha Q_alpha."""
        self._compatible(other)
        total = 0
        for alpha, c in self.coeffs.items():
            q = other.coeffs.get(alpha)
            if q is not None:
                total += math.prod(math.factorial(a) for a in alpha) * c * q
        return total


def _solve(matrix: list[list], rhs: list, exact: bool) -> list:
    if not exact:
        return list(np.linalg.solve(np.asarray(matrix, dtype=float), np.asarray(rhs, dtype=float)))
    n = len(rhs)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def harmonic_decompose(F: HomogeneousPolynomial) -> list[HomogeneousPolynomial]:
    """Split F = H_n + |x|^2 H_{n-2} + |x|^4 H_{n-4} + ... with every H_j harmonic.

    H_n is F minus its apolar projection onto |x|^2 P_{n-2}; the orthogonal
    complement of that subspace is exactly the harmonic polynomials, so the
    remainder is harmonic.  The cofactor is decomposed recursively.
    """
    if not isinstance(F, HomogeneousPolynomial):
        raise TypeError("expected a HomogeneousPolynomial")
    if F.dim < 2:
        raise ValueError("decomposition needs d >= 2 variables")
    if F.degree < 2:
        return [F]
    basis = [HomogeneousPolynomial(F.degree - 2, F.dim, {a: 1}) for a in multi_indices(F.degree - 2, F.dim)]
    lifted = [b.times_r2() for b in basis]
    gram = [[p.apolar(q) for q in lifted] for p in lifted]
    rhs = [p.apolar(F) for p in lifted]
    c = _solve(gram, rhs, F.exact)
    if not F.exact:
        c = [float(v) for v in c]
    cofactor = HomogeneousPolynomial(F.degree - 2, F.dim,
                                     {b_alpha: ci for b_alpha, ci in zip(multi_indices(F.degree - 2, F.dim), c)})
    head = F - cofactor.times_r2()
    return [head] + harmonic_decompose(cofactor)


def reassemble(parts: list[HomogeneousPolynomial]) -> HomogeneousPolynomial:
    total = parts[0]
    for m, part in enumerate(parts[1:], start=1):
        lifted = part
        for _ in range(m):
            lifted = lifted.times_r2()
        total = total + lifted
    return total


def random_polynomial(degree: int, dim: int, rng: np.random.Generator, exact: bool = True) -> HomogeneousPolynomial:
    coeffs = {}
    for alpha in multi_indices(degree, dim):
        if exact:
            coeffs[alpha] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
        else:
            coeffs[alpha] = float(rng.uniform(-1, 1))
    return HomogeneousPolynomial(degree, dim, coeffs)


def real_part_zn(n: int) -> HomogeneousPolynomial:
    """Re (x + i y)^n as a harmonic polynomial in two variables."""
    coeffs = {}
    for k in range(0, n + 1, 2):
        coeffs[(n - k, k)] = math.comb(n, k) * (-1) ** (k // 2)
    return HomogeneousPolynomial(n, 2, coeffs)


def imag_part_zn(n: int) -> HomogeneousPolynomial:
    coeffs = {}
    for k in range(1, n + 1, 2):
        coeffs[(n - k, k)] = math.comb(n, k) * (-1) ** ((k - 1) // 2)
    return HomogeneousPolynomial(n, 2, coeffs) if n else HomogeneousPolynomial.zero(0, 2)

