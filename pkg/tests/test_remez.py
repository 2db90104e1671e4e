import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uclab.remez import (ComplexMonicPolynomial, IntervalUnion, RealPolynomial, as_fraction_poly,
                         cartan_area_check, chebyshev, chebyshev_value, discrete_remez_check, max_abs,
                         planar_sublevel_area, polya_check, random_monic, random_polynomial, real_roots,
                         remez_bound, sharp_remez_bound, sublevel_measure_1d, sublevel_set_1d, verify_remez)


def test_chebyshev_coefficients_are_exact():
    assert chebyshev(0).coeffs == (1,)
    assert chebyshev(3).coeffs == (0, -3, 0, 4)
    assert all(isinstance(c, int) for c in chebyshev(12).coeffs)


@given(st.integers(0, 20), st.floats(0.0, math.pi))
@settings(max_examples=60, deadline=None)
def test_chebyshev_trigonometric_identity(n, t):
    assert float(chebyshev(n)(math.cos(t))) == pytest.approx(math.cos(n * t), abs=1e-9)


@pytest.mark.parametrize("n,x", [(3, 1.5), (10, 2.0), (20, 1.01)])
def test_chebyshev_value_outside_interval(n, x):
    assert chebyshev_value(n, x) == pytest.approx(math.cosh(n * math.acosh(x)), rel=1e-12)


def test_real_roots_of_chebyshev():
    roots = real_roots(chebyshev(7), -1.0, 1.0)
    expect = sorted(math.cos((2 * k - 1) * math.pi / 14) for k in range(1, 8))
    assert np.allclose(sorted(roots), expect, atol=1e-12)


def test_max_abs_finds_interior_peak():
    P = RealPolynomial((0.0, 1.0, 0.0, -1.0))  # x - x^3, peak at 1/sqrt(3)
    assert max_abs(P, (0.0, 1.0)) == pytest.approx(2 / (3 * math.sqrt(3)), rel=1e-12)


def test_interval_union_merges():
    E = IntervalUnion(((0.5, 1.0), (0.0, 0.6), (2.0, 3.0)))
    assert E.intervals == ((0.0, 1.0), (2.0, 3.0))
    assert E.measure == 2.0
    with pytest.raises(ValueError):
        IntervalUnion(((1.0, 0.0),))


@pytest.mark.parametrize("n", [1, 2, 5, 10])
@pytest.mark.parametrize("c", [0.1, 0.5, 2.0])
def test_chebyshev_attains_sharp_bound(n, c):
    res = verify_remez(chebyshev(n), IntervalUnion(((-1.0, 1.0),)), (-1.0, 1.0 + c))
    assert res.ratio == pytest.approx(sharp_remez_bound(n, c), rel=1e-9)
    assert res.passed and res.sharp_passed


@given(st.integers(1, 10), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_remez_inequality_on_random_sets(n, seed):
    rng = np.random.default_rng(seed)
    P = random_polynomial(n, rng)
    pts = np.sort(rng.uniform(-1, 1, size=6))
    E = IntervalUnion(tuple(zip(pts[::2], pts[1::2])))
    if E.measure < 1e-6:
        return
    res = verify_remez(P, E, (-1.0, 1.0))
    assert res.passed and res.sharp_passed
    assert res.sharp <= res.bound * (1 + 1e-12)


def test_remez_bound_validates_lengths():
    assert remez_bound(2, 2.0, 1.0) == 64.0
    with pytest.raises(ValueError):
        remez_bound(2, 1.0, 2.0)


def test_sublevel_set_of_square():
    E = sublevel_set_1d(RealPolynomial((0, 0, 1)), (-1.0, 1.0), 0.25)
    assert len(E.intervals) == 1
    assert E.intervals[0] == pytest.approx((-0.5, 0.5))


@given(st.integers(1, 10), st.floats(0.05, 5.0), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_sublevel_measure_bound(n, a, seed):
    res = sublevel_measure_1d(random_polynomial(n, np.random.default_rng(seed)), (-1.0, 1.0), a)
    assert res.passed
    assert res.measure <= 4 * 2 * math.exp(-a) * (1 + 1e-12)


def test_discrete_remez():
    P = chebyshev(4)
    S = [float(k) for k in range(0, 11)]
    mI, bound, ok = discrete_remez_check(P.compose_affine(0.1, -0.5), S, (0.0, 20.0), m=6)
    assert ok and mI <= bound
    with pytest.raises(ValueError):
        discrete_remez_check(P, [0.0, 0.5], (0.0, 1.0), m=1)


def test_fraction_polynomials_stay_exact():
    P = as_fraction_poly([Fraction(1, 3), 0, 1])
    assert P.derivative().coeffs == (0, 2)
    assert P.coeffs[0] == Fraction(1, 3)


def test_monic_roots_roundtrip():
    p = ComplexMonicPolynomial.from_roots([1.0, 1j, -2.0])
    assert p.degree == 3
    assert np.allclose(sorted(p.roots(), key=lambda z: (z.real, z.imag)),
                       sorted([1.0, 1j, -2.0], key=lambda z: (complex(z).real, complex(z).imag)))
    assert abs(p(1j)) < 1e-12


@pytest.mark.parametrize("n,a", [(1, 0.5), (3, 1.0), (6, 0.2)])
def test_power_attains_polya_bound(n, a):
    p = ComplexMonicPolynomial.from_roots([0.0] * n)
    m = planar_sublevel_area(p, a)
    exact = math.pi * math.exp(-2 * a)
    assert m.inner <= exact <= m.outer
    assert abs(m.estimate - exact) <= m.boundary_error + m.pixel_area


@given(st.integers(1, 8), st.floats(0.0, 2.0), st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_polya_and_cartan_on_random_monics(n, a, seed):
    p = random_monic(n, np.random.default_rng(seed))
    assert polya_check(p, a).passed
    assert cartan_area_check(p, a).passed
