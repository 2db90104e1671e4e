import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uclab.families import homogeneous_harmonic, random_harmonic_sum, sample_on_box
from uclab.fields import ScalarField
from uclab.smallness import (BoundCertificate, RecursionParams, base_partition_check, closure_lhs, decay_fit,
                             derived_propagation_constants, induction_engine, propagation_constant,
                             propagation_exponent, recursion_oracle, remez_solutions_check, simulate_recursion,
                             smallest_k0, sublevel_measure, verify_certificate)


def _field(f, h=1 / 64):
    return ScalarField.from_function(f, (-1, -1), (1, 1), h)


def test_sublevel_measure_of_linear_function():
    u = _field(lambda x, y: x)
    st_ = sublevel_measure(u, (0, 0), 1.0, math.log(4))
    # |x| < 1/8 on [-1/2, 1/2]: 15 of 65 columns
    assert st_.m == pytest.approx(15 / 65)


def test_sublevel_measure_decreases_in_a():
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(1)), (-1, -1), (1, 1), 1 / 64)
    ms = [sublevel_measure(u, (0, 0), 1.0, a).m for a in np.linspace(0.1, 5, 12)]
    assert all(b <= a for a, b in zip(ms, ms[1:]))


def test_decay_fit_of_homogeneous_mode():
    u = sample_on_box(homogeneous_harmonic(1), (-1, -1), (1, 1), 1 / 128)
    fit = decay_fit(u, (0, 0), 1.0, np.linspace(0.5, 3.0, 11))
    assert fit.beta == pytest.approx(1.0, abs=0.1)
    assert fit.r2 > 0.95
    with pytest.raises(ValueError):
        decay_fit(u, (0, 0), 1.0, [0.5, 1.0], N=0.0)


def test_remez_for_solutions_trivial_mask():
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(2)), (-1, -1), (1, 1), 1 / 32)
    Q = u.cube((0, 0), 1.0)
    res = remez_solutions_check(u, Q, (0, 0), 1.0, N=1.0, C=1.0)
    assert res.passed and res.ratio_QE == 1.0
    with pytest.raises(ValueError):
        remez_solutions_check(u, np.zeros_like(Q), (0, 0), 1.0, N=1.0, C=1.0)


def test_remez_for_solutions_huge_exponent_does_not_overflow():
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(3)), (-1, -1), (1, 1), 1 / 32)
    E = u.cube((0.4, 0.4), 0.1)
    res = remez_solutions_check(u, E, (0, 0), 1.0, N=500.0, C=4.0)
    assert res.passed and res.rhs == math.inf


def test_derived_constants():
    alpha, C0, C1 = derived_propagation_constants(2.0, 1.0, 0.0, 0.5)
    assert C1 == pytest.approx(2 * math.log(4))
    assert alpha == pytest.approx(1 / (C1 + 1))
    assert C0 == pytest.approx(2.0**alpha)
    with pytest.raises(ValueError):
        derived_propagation_constants(2.0, 1.0, 0.0, 0.0)


def test_propagation_with_alpha_one_half():
    u = _field(lambda x, y: x + 2.0)
    E = u.cube((0, 0), 0.1)
    eps = float(np.abs(u.values[E]).max())
    res = propagation_constant(u, E, u.cube((0, 0), 1.0), u.defined, eps, C0=2.0, alpha=0.5)
    assert res.passed
    with pytest.raises(ValueError):
        propagation_constant(u, E, u.cube((0, 0), 1.0), u.defined, eps / 2, C0=2.0, alpha=0.5)
    assert 0.0 <= propagation_exponent(res.max_K, res.sup_Omega, eps) <= 1.0


def test_base_partition_of_positive_field():
    u = _field(lambda x, y: x + 3.0)
    res = base_partition_check(u, (0, 0), 1.0, 4, N0=3.0, N=0.5)
    # sup_Q = 3.5; weakest subcube peaks at 2.75; max on Q/2 at x = 1/4 sits in a subcube with inf 3.25
    assert res.passed
    assert res.b == pytest.approx(2.75 / 3.5)
    assert res.m == pytest.approx(3.25 / 3.5)
    with pytest.raises(ValueError):
        base_partition_check(u, (0, 0), 1.0, 4, N0=1.0, N=2.0)


@given(st.floats(0.05, 2.0), st.floats(0.5, 0.999), st.floats(0.01, 1.0))
@settings(max_examples=50, deadline=None)
def test_smallest_k0_is_exact(a0, s, frac):
    beta = frac * math.log(1 / s) / a0
    k = smallest_k0(beta, a0, s)
    if k is None:
        return
    assert closure_lhs(beta, a0, s, k) <= 1.0
    assert k == 2 or closure_lhs(beta, a0, s, k - 1) > 1.0


def test_engine_beta_decreases_with_s():
    betas = [induction_engine(RecursionParams(s=s, a0=1.0)).beta for s in (0.25, 0.5, 0.75, 63 / 64)]
    assert all(b > c for b, c in zip(betas, betas[1:]))


def test_engine_rejects_bad_params():
    with pytest.raises(ValueError):
        RecursionParams(s=1.0, a0=1.0)
    with pytest.raises(ValueError):
        RecursionParams(s=0.5, a0=0.0)
    assert RecursionParams.from_J(8, a0=1.0).s == 63 / 64


@pytest.mark.parametrize("s", [0.25, 0.5, 63 / 64])
def test_certificate_verifies_and_bounds_the_recursion(s):
    cert = induction_engine(RecursionParams(s=s, a0=1.0))
    assert verify_certificate(cert)
    ok, worst = simulate_recursion(cert)
    assert ok and worst <= 1e-12


def test_certificate_json_roundtrip_and_tamper():
    cert = induction_engine(RecursionParams.from_J(8, a0=1.0))
    back = BoundCertificate.from_json(json.loads(json.dumps(cert.to_json())))
    assert verify_certificate(back)
    bad = BoundCertificate.from_json({**cert.to_json(), "beta": cert.beta * 1.5})
    assert not verify_certificate(bad)


def test_recursion_oracle_small_entries():
    t = recursion_oracle(C=1.0, k_max=3, j_max=10, j_cut=40)
    assert t.m[0, 5] == pytest.approx(math.exp(-5))
    assert t.m[1, 4] == pytest.approx(math.exp(-6) + 0.25, rel=1e-12)
    assert t.holds
    with pytest.raises(ValueError):
        recursion_oracle(j_max=30, j_cut=40)
