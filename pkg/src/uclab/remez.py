"""Chebyshev polynomials and Remez, Polya and Cartan type polynomial inequalities.

Maxima over intervals come from critical points (derivative roots found by
recursive isolation), never from dense sampling, so an inequality check cannot
fail because a peak fell between samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

ROOT_TOL = 1e-13


# -- real polynomials ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RealPolynomial:
    """Coefficients in increasing degree; ints/Fractions stay exact."""
    coeffs: tuple

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c) if c else (0,))

    @property
    def degree(self) -> int:
        return 0 if self.coeffs == (0,) else len(self.coeffs) - 1

    def __eq__(self, other) -> bool:
        return isinstance(other, RealPolynomial) and self.coeffs == other.coeffs

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c in reversed(self.coeffs):
            out = out * x + float(c)
        return out

    def derivative(self) -> "RealPolynomial":
        return RealPolynomial(tuple(k * c for k, c in enumerate(self.coeffs))[1:] or (0,))

    def scale(self, s) -> "RealPolynomial":
        return RealPolynomial(tuple(s * c for c in self.coeffs))

    def shift(self, t) -> "RealPolynomial":
        return RealPolynomial((self.coeffs[0] + t,) + self.coeffs[1:])

    def compose_affine(self, a: float, b: float) -> "RealPolynomial":
        """x -> P(a x + b)."""
        out = np.zeros(len(self.coeffs))
        base = np.array([1.0])
        lin = np.array([b, a])
        for c in self.coeffs:
            out[: len(base)] += float(c) * base
            base = np.convolve(base, lin)
        return RealPolynomial(tuple(out))

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def chebyshev(n: int) -> RealPolynomial:
    """T_n by T_{n+1} = 2x T_n - T_{n-1} in integer arithmetic."""
    if n < 0:
        raise ValueError("n must be >= 0")
    prev, cur = [1], [0, 1]
    if n == 0:
        return RealPolynomial((1,))
    for _ in range(n - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return RealPolynomial(tuple(cur))


def chebyshev_value(n: int, x: float) -> float:
    """T_n(x) by the three-term recurrence at one point."""
    if n == 0:
        return 1.0
    prev, cur = 1.0, float(x)
    for _ in range(n - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


# -- roots and maxima ------------------------------------------------------------

def _bisect(P: RealPolynomial, lo: float, hi: float, flo: float) -> float:
    while hi - lo > ROOT_TOL * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = float(P(mid))
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_roots(P: RealPolynomial, lo: float, hi: float) -> list[float]:
    """Roots of P in [lo, hi] by derivative isolation: between consecutive
    critical points P is monotone, so each sign change brackets one root."""
    if P.degree == 0:
        return []
    if P.degree == 1:
        a, b = (float(c) for c in P.coeffs)
        r = -a / b
        return [r] if lo <= r <= hi else []
    crit = real_roots(P.derivative(), lo, hi)
    knots = [lo] + crit + [hi]
    roots = []
    for a, b in zip(knots[:-1], knots[1:]):
        fa, fb = float(P(a)), float(P(b))
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(P, a, b, fa))
    if float(P(hi)) == 0.0:
        roots.append(hi)
    # a critical point that touches zero is a root of even multiplicity
    for c in crit:
        if abs(float(P(c))) <= 1e-14 * max(1.0, float(np.max(np.abs(P.as_floats())))):
            roots.append(c)
    return sorted(set(roots))


@dataclass(frozen=True)
class IntervalUnion:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if b < a:
                raise ValueError(f"bad interval [{a}, {b}]")
        merged: list[list[float]] = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def hull(self) -> tuple[float, float]:
        return self.intervals[0][0], self.intervals[-1][1]

    def within(self, lo: float, hi: float) -> bool:
        return all(lo <= a and b <= hi for a, b in self.intervals)


def max_abs(P: RealPolynomial, E: IntervalUnion | tuple[float, float]) -> float:
    """max |P| over a closed interval union: endpoints plus interior critical points."""
    ivs = E.intervals if isinstance(E, IntervalUnion) else (E,)
    best = 0.0
    Pd = P.derivative()
    for a, b in ivs:
        pts = [a, b] + [c for c in real_roots(Pd, a, b)]
        best = max(best, float(np.max(np.abs(P(np.array(pts))))))
    return best


# -- Remez ----------------------------------------------------------------------------

def remez_bound(n: int, I_len: float, E_len: float) -> float:
    """(4|I|/|E|)^n."""
    if not 0 < E_len <= I_len * (1 + 1e-15):
        raise ValueError("need 0 < |E| <= |I|")
    return (4.0 * I_len / E_len) ** n


def sharp_remez_bound(n: int, c: float) -> float:
    """T_n(1 + c): the best constant for E = [-1, 1] inside I = [-1, 1 + c]."""
    if c < 0:
        raise ValueError("c must be >= 0")
    return chebyshev_value(n, 1.0 + c)


@dataclass(frozen=True)
class RemezCheck:
    ratio: float
    bound: float
    sharp: float
    passed: bool
    sharp_passed: bool


def verify_remez(P: RealPolynomial, E: IntervalUnion, I: tuple[float, float], rtol: float = 1e-9) -> RemezCheck:
    """max_I|P| / max_E|P| against (4|I|/|E|)^n and the sharp T_n(2|I|/|E| - 1)."""
    lo, hi = I
    if not E.within(lo, hi):
        raise ValueError("E must lie inside I")
    if E.measure <= 0:
        raise ValueError("|E| must be positive")
    n = P.degree
    mI, mE = max_abs(P, (lo, hi)), max_abs(P, E)
    if mE == 0:
        raise ValueError("P vanishes on E")
    ratio = mI / mE
    x = (hi - lo) / E.measure
    bound = remez_bound(n, hi - lo, E.measure)
    sharp = chebyshev_value(n, 2 * x - 1)
    return RemezCheck(ratio, bound, sharp, ratio <= bound * (1 + rtol), ratio <= sharp * (1 + rtol))


def sublevel_set_1d(P: RealPolynomial, I: tuple[float, float], threshold: float) -> IntervalUnion:
    """{x in I : |P(x)| < threshold} as an interval union (closure)."""
    lo, hi = I
    if threshold <= 0:
        return IntervalUnion(())
    cuts = sorted(set([lo, hi] + real_roots(P.shift(-threshold), lo, hi) + real_roots(P.shift(threshold), lo, hi)))
    keep = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a and abs(float(P(0.5 * (a + b)))) < threshold:
            keep.append((a, b))
    return IntervalUnion(tuple(keep))


@dataclass(frozen=True)
class SublevelCheck:
    measure: float
    bound: float
    passed: bool
    set: IntervalUnion


def sublevel_measure_1d(P: RealPolynomial, I: tuple[float, float], a: float) -> SublevelCheck:
    """|{|P| < e^{-a n}} cap I| for P normalized to max_I |P| = 1, against 4|I|e^{-a}."""
    if a <= 0:
        raise ValueError("a must be > 0")
    m = max_abs(P, I)
    if m == 0:
        raise ValueError("P vanishes on I")
    Q = P.scale(1.0 / m)
    E = sublevel_set_1d(Q, I, math.exp(-a * P.degree))
    bound = 4 * (I[1] - I[0]) * math.exp(-a)
    return SublevelCheck(E.measure, bound, E.measure <= bound * (1 + 1e-12), E)


def discrete_remez_check(P: RealPolynomial, S: Sequence[float], I: tuple[float, float], m: int,
                         spacing: float = 1.0) -> tuple[float, float, bool]:
    """max_I|P| <= (4|I|/m)^n max_S|P| for S on a lattice of the given spacing.

    Returns (max_I|P|, bound, pass); |I| is measured in lattice units.
    """
    S = np.asarray(sorted(set(float(s) for s in S)))
    n = P.degree
    if m < 1 or len(S) < n + m:
        raise ValueError("need |S| >= n + m with m >= 1")
    if S.min() < I[0] or S.max() > I[1]:
        raise ValueError("S must lie inside I")
    steps = S / spacing
    if not np.allclose(steps, np.round(steps), atol=1e-9):
        raise ValueError("S must lie on the lattice")
    mI = max_abs(P, I)
    mS = float(np.max(np.abs(P(S))))
    bound = (4.0 * (I[1] - I[0]) / spacing / m) ** n * mS
    return mI, bound, mI <= bound * (1 + 1e-9)


def random_polynomial(n: int, rng: np.random.Generator) -> RealPolynomial:
    """Coefficients uniform in [-1, 1], normalized to unit max coefficient."""
    c = rng.uniform(-1, 1, size=n + 1)
    if n and c[-1] == 0:
        c[-1] = 1.0
    return RealPolynomial(tuple(c / np.max(np.abs(c))))


# -- complex monic polynomials ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ComplexMonicPolynomial:
    """Coefficients a_0..a_{n-1} of z^n + a_{n-1} z^{n-1} + ... + a_0; the leading 1 is implicit."""
    lower: tuple[complex, ...]

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> "ComplexMonicPolynomial":
        c = np.poly(np.asarray(roots, dtype=complex))  # highest first, c[0] == 1
        return cls(tuple(complex(v) for v in c[1:][::-1]))

    @property
    def degree(self) -> int:
        return len(self.lower)

    @property
    def coeffs(self) -> tuple[complex, ...]:
        return self.lower + (1 + 0j,)

    def roots(self) -> np.ndarray:
        if self.degree == 0:
            return np.zeros(0, dtype=complex)
        return np.roots(np.array(self.coeffs[::-1]))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for c in reversed(self.lower):
            out = out * z + c
        return out


def random_monic(n: int, rng: np.random.Generator) -> ComplexMonicPolynomial:
    c = rng.uniform(-1, 1, size=n) + 1j * rng.uniform(-1, 1, size=n)
    return ComplexMonicPolynomial(tuple(complex(v) for v in c))


@dataclass(frozen=True)
class PlanarSublevelMask:
    inner: float
    estimate: float
    outer: float
    pixel_area: float
    boundary_error: float
    resolution: int

    def __post_init__(self):
        if not self.inner <= self.estimate <= self.outer:
            raise ValueError("inner <= estimate <= outer violated")


def planar_sublevel_area(p: ComplexMonicPolynomial, a: float, rel_error: float = 0.01,
                         target: float | None = None, max_level: int = 12, base: int = 64) -> PlanarSublevelMask:
    """Area of {|p(z)| < e^{-n a}} by pixel counting with local refinement.

    Every point of the set is within e^{-a} of a root, so the box spanned by
    the roots plus that margin contains it.  Pixels whose four corners and
    center agree are classified whole; mixed pixels are split 2x2 until the
    area of still-mixed pixels is below ``rel_error * target`` (or the level
    cap).  The estimate counts pixel centers; inner/outer count pixels that
    are fully/partly below the threshold.
    """
    n = p.degree
    if n == 0:
        raise ValueError("degree must be >= 1")
    r = math.exp(-a)
    thr = math.exp(-n * a)
    roots = p.roots()
    x0, x1 = roots.real.min() - r, roots.real.max() + r
    y0, y1 = roots.imag.min() - r, roots.imag.max() + r
    side = max(x1 - x0, y1 - y0)
    target = math.pi * r * r if target is None else target
    # initial pixels no larger than r/8 so no component is skipped
    cells = max(base, int(math.ceil(8 * side / r)))
    size = side / cells
    ii, jj = np.meshgrid(np.arange(cells), np.arange(cells), indexing="ij")
    corners = np.stack([x0 + ii.ravel() * size, y0 + jj.ravel() * size], axis=-1)
    inner = estimate = outer = 0.0
    level = 0
    while True:
        px, py = corners[:, 0], corners[:, 1]
        samples = [px + 1j * py, px + size + 1j * py, px + 1j * (py + size), px + size + 1j * (py + size)]
        inside = np.stack([np.abs(p(z)) < thr for z in samples])
        center_in = np.abs(p(px + 0.5 * size + 1j * (py + 0.5 * size))) < thr
        all_in = inside.all(axis=0) & center_in
        none_in = ~inside.any(axis=0) & ~center_in
        # pixels containing a root are never trusted as uniform
        for z0 in roots:
            hit = (px <= z0.real) & (z0.real <= px + size) & (py <= z0.imag) & (z0.imag <= py + size)
            none_in &= ~hit
        mixed = ~(all_in | none_in)
        area = size * size
        inner += all_in.sum() * area
        outer += all_in.sum() * area
        estimate += all_in.sum() * area
        err = mixed.sum() * area
        if err <= rel_error * target or level >= max_level or not mixed.any():
            inner_final = inner
            estimate += (center_in & mixed).sum() * area
            outer += err
            return PlanarSublevelMask(inner_final, estimate, outer, area, err, int(round(side / size)))
        m = corners[mixed]
        size /= 2
        corners = np.concatenate([m, m + [size, 0], m + [0, size], m + [size, size]])
        level += 1


@dataclass(frozen=True)
class AreaCheck:
    area: PlanarSublevelMask
    bound: float
    passed: bool


def polya_check(p: ComplexMonicPolynomial, a: float, rel_error: float = 0.01) -> AreaCheck:
    """|{|p| < e^{-n a}}| <= pi e^{-2a}; pass iff the inner pixel area is within the bound."""
    if a < 0:
        raise ValueError("a must be >= 0")
    bound = math.pi * math.exp(-2 * a)
    area = planar_sublevel_area(p, a, rel_error, bound)
    return AreaCheck(area, bound, area.inner <= bound)


def cartan_area_check(p: ComplexMonicPolynomial, a: float, rel_error: float = 0.01) -> AreaCheck:
    """Same pixel area against the weaker 4 pi e^{1-2a}."""
    if a < 0:
        raise ValueError("a must be >= 0")
    bound = 4 * math.pi * math.exp(1 - 2 * a)
    area = planar_sublevel_area(p, a, rel_error, math.pi * math.exp(-2 * a))
    return AreaCheck(area, bound, area.inner <= bound)


def as_fraction_poly(coeffs: Sequence) -> RealPolynomial:
    return RealPolynomial(tuple(Fraction(c) for c in coeffs))
