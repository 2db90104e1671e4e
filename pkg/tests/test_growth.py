import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uclab.discrete_laplace import CoefficientMatrixField
from uclab.families import homogeneous_harmonic, random_harmonic_sum, sample_on_box
from uclab.fields import DomainError, box_domain
from uclab.growth import (chain_propagation, change_of_variables, check_frequency_monotone, df_doubling_scan,
                          doubling_ball, doubling_cube, fit_inverse_doubling, frequency_profile, growth_bracket,
                          min_doubling_partition, smallest_monotone_constant, three_sphere_check)

RADII = np.linspace(0.1, 0.4, 7)


@pytest.mark.parametrize("n", [1, 2, 3, 6])
def test_frequency_of_homogeneous_harmonic_is_degree(n):
    prof = frequency_profile(homogeneous_harmonic(n, 0.3), (0, 0), RADII)
    assert np.abs(prof.N - n).max() < 0.02


def test_frequency_of_sampled_field_matches_closed_form():
    f = homogeneous_harmonic(3)
    u = sample_on_box(f, (-1, -1), (1, 1), 1 / 64)
    prof = frequency_profile(u, (0, 0), RADII)
    assert np.abs(prof.N - 3).max() < 0.02
    assert np.all(prof.N_err >= 0)


def test_frequency_limit_at_zero_is_vanishing_order():
    f = homogeneous_harmonic(2)
    g = lambda x, y: f(x, y) + 0.5 * homogeneous_harmonic(4)(x, y)  # noqa: E731
    prof = frequency_profile(g, (0, 0), [1e-3, 0.5])
    assert prof.N[0] == pytest.approx(2.0, abs=0.1)


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_frequency_is_monotone_for_harmonic_sums(seed):
    f = random_harmonic_sum(np.random.default_rng(seed))
    prof = frequency_profile(f, (0, 0), RADII)
    assert check_frequency_monotone(prof).passed
    assert smallest_monotone_constant(prof) == 0.0


def test_growth_bracket_for_pure_mode():
    prof = frequency_profile(homogeneous_harmonic(4), (0, 0), RADII)
    b = growth_bracket(prof, RADII[0], RADII[-1])
    assert b.passed
    assert b.ratio == pytest.approx((RADII[-1] / RADII[0]) ** 8, rel=1e-6)


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_three_spheres_log_convexity(seed):
    f = random_harmonic_sum(np.random.default_rng(seed))
    res = three_sphere_check(f, (0, 0), 0.1)
    assert res.passed
    assert 0.0 <= res.alpha <= 1.0


def test_profile_rejects_bad_radii_and_off_grid_circles():
    u = sample_on_box(homogeneous_harmonic(1), (-1, -1), (1, 1), 1 / 32)
    with pytest.raises(ValueError):
        frequency_profile(u, (0, 0), [0.3, 0.2])
    with pytest.raises(DomainError):
        frequency_profile(u, (0.8, 0), [0.5])


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_doubling_of_homogeneous_harmonic(n):
    u = sample_on_box(homogeneous_harmonic(n), (-1, -1), (1, 1), 1 / 64)
    assert doubling_ball(u, (0, 0), 0.25).value == pytest.approx(n * math.log(2), abs=0.02)
    rec = doubling_cube(u, (0, 0), 1.0)
    assert rec.meta["self"] == pytest.approx(n * math.log(2), abs=0.02)
    assert rec.value >= rec.meta["self"]


def test_doubling_cube_is_deterministic_per_seed():
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(5)), (-1, -1), (1, 1), 1 / 32)
    assert doubling_cube(u, (0, 0), 1.0, seed=3).value == doubling_cube(u, (0, 0), 1.0, seed=3).value


def test_inverse_doubling_fit_holds_on_records():
    rng = np.random.default_rng(9)
    fields = [sample_on_box(random_harmonic_sum(rng), (-1, -1), (1, 1), 1 / 32) for _ in range(10)]
    recs = [doubling_cube(u, (0, 0), 1.0, depth=2, jitter=8) for u in fields]
    a1, a2 = fit_inverse_doubling(recs)
    assert a1 >= 0 and a2 >= 0
    for r in recs:
        assert r.meta["self"] >= a1 * r.value - a2 - 1e-12


def test_lifted_doubling_grows_like_square_root():
    scan = df_doubling_scan([2, 4, 8, 16], family="torus")
    assert 0.4 <= scan.exponent <= 0.6
    assert np.all(np.diff(scan.N_max) > 0)


def test_partition_subcubes_of_pure_mode():
    u = sample_on_box(homogeneous_harmonic(6), (-1, -1), (1, 1), 1 / 64)
    res = min_doubling_partition(u, (0, 0), 1.0, K=8, depth=2, jitter=4)
    assert res.halving
    assert res.N_q_min <= res.N_Q / 2
    with pytest.raises(ValueError):
        min_doubling_partition(u, (0, 0), 1.0, K=4)


def test_chain_propagation_bound_holds():
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(2)), (-1, -1), (1, 1), 1 / 64)
    res = chain_propagation(u, ((-0.3, 0.0), 0.1), ((0.3, 0.0), 0.1), k=4, rho=0.1)
    assert res.direct_holds
    assert 0.0 <= res.gamma <= 1.0


def test_change_of_variables_normalizes_coefficients():
    dom = box_domain((-1, -1), (1, 1), 1 / 32)
    A = CoefficientMatrixField.constant(dom, [[2.0, 0.5], [0.5, 1.0]])
    u = sample_on_box(lambda x, y: x * 0 + 1.0, (-1, -1), (1, 1), 1 / 32)
    _, At = change_of_variables(u, A, (0.0, 0.0), half_width=0.3)
    a11, a12, a22 = (float(np.asarray(v).ravel()[0]) for v in At.at(np.array([0.0]), np.array([0.0])))
    assert (a11, a12, a22) == pytest.approx((1.0, 0.0, 1.0), abs=1e-12)
