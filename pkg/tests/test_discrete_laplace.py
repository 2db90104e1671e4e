import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uclab.bessel import bessel_zero
from uclab.discrete_laplace import (CoefficientMatrixField, EllipticityError, assemble_dirichlet,
                                    assemble_divergence_form, caccioppoli_check, domain_monotonicity_check,
                                    eigensolve, first_eigenvalue, harnack_ratio, minmax_check, norm_equivalence,
                                    oscillation_ratio, rayleigh_quotient, solve_dirichlet)
from uclab.families import random_solution
from uclab.fields import DomainError, ScalarField, disk_domain, square_domain


def test_single_interior_node():
    L = assemble_dirichlet(square_domain(2, 0.0, 2.0))
    assert L.matrix.toarray().tolist() == [[4.0]]


def test_square_eigenvalue_converges_at_second_order():
    exact = 2 * math.pi**2
    errs = [abs(first_eigenvalue(square_domain(n)) - exact) for n in (16, 32, 64)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_disk_first_eigenvalue():
    lam = first_eigenvalue(disk_domain(1 / 64))
    assert lam == pytest.approx(bessel_zero(0, 1) ** 2, rel=0.02)


def test_identity_coefficients_reproduce_dirichlet():
    sq = square_domain(16)
    A = assemble_divergence_form(sq, CoefficientMatrixField.identity(sq)).matrix
    assert abs(A - assemble_dirichlet(sq).matrix).max() < 1e-9


def test_anisotropic_constant_coefficients():
    sq = square_domain(32)
    A = CoefficientMatrixField.constant(sq, [[1.0, 0.0], [0.0, 4.0]])
    lam = eigensolve(assemble_divergence_form(sq, A), 1)[0].eigenvalue
    assert lam == pytest.approx(5 * math.pi**2, rel=0.01)


def test_variable_coefficients_are_symmetric():
    sq = square_domain(24)
    B = CoefficientMatrixField.from_function(lambda x, y: (1 + 0.3 * x, 0.2 * np.sin(3 * y), 1 + 0.1 * x * y), sq)
    L = assemble_divergence_form(sq, B)
    assert L.is_symmetric()
    pairs = eigensolve(L, 3)
    assert all(p.residual < 1e-8 for p in pairs)
    assert [p.eigenvalue for p in pairs] == sorted(p.eigenvalue for p in pairs)


def test_rejects_non_elliptic_coefficients():
    sq = square_domain(8)
    with pytest.raises(EllipticityError):
        CoefficientMatrixField.constant(sq, [[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(EllipticityError):
        assemble_divergence_form(sq, CoefficientMatrixField.constant(sq, [[1.0, 0.0], [0.0, -1.0]]))


def test_eigenvectors_are_normalized_and_positive_ground_state():
    p = eigensolve(assemble_dirichlet(square_domain(32)), 1)[0]
    v = p.vector
    assert np.sum(v.values[v.defined] ** 2) * v.h**2 == pytest.approx(1.0, rel=1e-9)
    assert np.all(v.values[v.domain.mask] > 0)


def test_rayleigh_quotient_of_eigenvector():
    L = assemble_dirichlet(square_domain(32))
    p = eigensolve(L, 2)[1]
    assert rayleigh_quotient(p.vector, L) == pytest.approx(p.eigenvalue, rel=1e-9)
    assert rayleigh_quotient(p.vector) == pytest.approx(p.eigenvalue, rel=1e-6)


def test_domain_monotonicity():
    outer = square_domain(32)
    mask = outer.mask.copy()
    mask[:, 20:] = False
    l1, l2, ok = domain_monotonicity_check(outer.with_mask(mask), outer)
    assert ok and l1 > l2


def test_minmax_never_beats_eigenvalue():
    sq = square_domain(24)
    L = assemble_dirichlet(sq)
    lam = [p.eigenvalue for p in eigensolve(L, 3)]
    x, y = (a.ravel()[L.interior] for a in sq.mesh())
    basis = np.column_stack([np.sin(i * math.pi * x) * np.sin(j * math.pi * y)
                             for i in range(1, 5) for j in range(1, 5)])
    decay = np.array([1.0 / (i * i + j * j) for i in range(1, 5) for j in range(1, 5)])
    for k in (1, 2, 3):
        best = minmax_check(L, k, basis, np.random.default_rng(k), trials=200, decay=decay)
        assert best >= lam[k - 1] * (1 - 1e-9)
        assert best <= lam[k - 1] * 1.5


@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
@settings(max_examples=20, deadline=None)
def test_linear_data_is_reproduced(a, b, c):
    sq = square_domain(16)
    u = solve_dirichlet(assemble_dirichlet(sq), lambda x, y: a * x + b * y + c)
    X, Y = sq.mesh()
    assert np.abs(u.values - (a * X + b * Y + c)).max() < 1e-9


@given(st.integers(0, 2**31))
@settings(max_examples=15, deadline=None)
def test_maximum_principle(seed):
    u = random_solution(np.random.default_rng(seed), n=32)
    inner = u.values[u.domain.mask]
    outer = u.values[u.defined & ~u.domain.mask]
    assert inner.max() <= outer.max() + 1e-12
    assert inner.min() >= outer.min() - 1e-12


def test_harnack_of_affine_function():
    u = ScalarField.from_function(lambda x, y: x + 2.0, (-1, -1), (1, 1), 1 / 64)
    assert harnack_ratio(u, (0, 0), 0.25) == pytest.approx(2.25 / 1.75, rel=1e-12)
    with pytest.raises(ValueError):
        harnack_ratio(u.with_values(u.values - 2.0), (0, 0), 0.25)


def test_oscillation_of_affine_function():
    u = ScalarField.from_function(lambda x, y: x, (-1, -1), (1, 1), 1 / 64)
    assert oscillation_ratio(u, (0, 0), 1.0, 0.5) == (pytest.approx(0.5, rel=1e-12), False)
    const = u.with_values(np.ones_like(u.values))
    assert oscillation_ratio(const, (0, 0), 1.0, 0.5) == (0.0, True)


def test_caccioppoli_of_affine_function():
    u = ScalarField.from_function(lambda x, y: x, (-1, -1), (1, 1), 1 / 128)
    res = caccioppoli_check(u, (0, 0), 0.25, 0.5)
    assert res.lhs == pytest.approx(math.pi / 16, rel=0.02)
    assert res.ratio == pytest.approx(0.25, rel=0.03)


def test_regions_must_fit_inside_data():
    u = ScalarField.from_function(lambda x, y: x + 3.0, (-1, -1), (1, 1), 1 / 32)
    with pytest.raises(DomainError):
        harnack_ratio(u, (0.8, 0), 0.25)


def test_norm_equivalence_ordering():
    u = random_solution(np.random.default_rng(3), n=64)
    sup, avg_b, _ = norm_equivalence(u, (0, 0), 0.25)
    assert sup >= avg_b
