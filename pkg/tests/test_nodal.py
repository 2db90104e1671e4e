import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uclab.families import random_harmonic_sum, sample_on_box
from uclab.fields import ScalarField, square_domain
from uclab.model_spectra import circle_eigenfunction, torus_eigenfunction
from uclab.nodal import (calibrate_zero_cube_factor, count_nodal_domains, courant_table, extract_zero_set,
                         label_nodal_domains, lattice_modes, nodal_domain_eigenvalue_check,
                         nodal_measure_vs_doubling, torus_random_wave, yau_scaling_fit, zero_cube_growth,
                         zero_density_radius)

H = 1 / 64


def _field(f, h=H):
    return ScalarField.from_function(f, (-1, -1), (1, 1), h)


def test_line_zero_set_length():
    Z = extract_zero_set(_field(lambda x, y: y + 0.01))
    assert Z.length == pytest.approx(2.0, abs=2 * H)
    assert not Z.plateau


def test_circle_zero_set_length():
    Z = extract_zero_set(_field(lambda x, y: x**2 + y**2 - 0.25))
    assert Z.length == pytest.approx(math.pi, rel=0.01)


def test_plateau_is_flagged():
    assert extract_zero_set(_field(lambda x, y: np.maximum(x, 0.0))).plateau


def test_zero_set_exports(tmp_path):
    Z = extract_zero_set(_field(lambda x, y: x - 0.01))
    Z.to_csv(tmp_path / "z.csv")
    Z.to_svg(tmp_path / "z.svg")
    rows = list(csv.reader(open(tmp_path / "z.csv")))
    assert rows[0] == ["x0", "y0", "x1", "y1"] and len(rows) == len(Z.segments) + 1
    assert (tmp_path / "z.svg").read_text().startswith("<")


def test_quadrant_domains():
    lab = label_nodal_domains(_field(lambda x, y: (x + 0.01) * (y + 0.01)))
    assert lab.count == 4
    assert sorted(lab.signs.tolist()) == [-1, -1, 1, 1]


@given(st.integers(0, 2**31), st.floats(0.1, 10.0))
@settings(max_examples=15, deadline=None)
def test_domain_count_is_sign_and_scale_invariant(seed, s):
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(seed)), (-1, -1), (1, 1), 1 / 32)
    n = count_nodal_domains(u)
    assert count_nodal_domains(u.with_values(-s * u.values)) == n


def test_square_product_mode_has_nine_domains():
    sq = square_domain(64)
    X, Y = sq.mesh()
    u = ScalarField(np.sin(3 * math.pi * X) * np.sin(3 * math.pi * Y), sq)
    assert count_nodal_domains(u, zero_tol=1e-8) == 9


def test_periodic_domains_wrap():
    phi = torus_eigenfunction((1, 0), points=128)
    assert count_nodal_domains(phi.field(), zero_tol=1e-10) == 2


def test_torus_strip_is_a_dirichlet_domain():
    phi = torus_eigenfunction((1, 0), points=512)
    lam1, gap = nodal_domain_eigenvalue_check(phi.field(), phi.eigenvalue, 1)
    assert gap < 0.05
    assert lam1 == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_circle_zero_density(n):
    assert zero_density_radius(circle_eigenfunction(n)) == pytest.approx(math.pi / (2 * n), rel=1e-9)


def test_torus_zero_density_of_stripes():
    phi = torus_eigenfunction((2, 0), points=256)
    assert zero_density_radius(phi) == pytest.approx(math.pi / 4, abs=2 * math.pi / 256)


def test_zero_density_rejects_constants():
    with pytest.raises(ValueError):
        zero_density_radius(circle_eigenfunction(0))


def test_lattice_modes():
    assert lattice_modes(5) == sorted([(1, 2), (2, 1), (1, -2), (2, -1)])
    assert lattice_modes(3) == []
    with pytest.raises(ValueError):
        torus_random_wave(3, np.random.default_rng(0))


def test_yau_fit_on_random_waves():
    fit = yau_scaling_fit([25, 50, 100, 200], seed=1, points=256)
    assert 0.35 < fit.slope < 0.65
    assert fit.C1 <= fit.C2
    with pytest.raises(ValueError):
        yau_scaling_fit([25])


def test_nodal_measure_scatter_envelopes():
    rng = np.random.default_rng(4)
    fields = [sample_on_box(random_harmonic_sum(rng, vanishing=True), (-1, -1), (1, 1), 1 / 32) for _ in range(6)]
    sc = nodal_measure_vs_doubling(fields, (0, 0), 1.0, depth=2, jitter=4)
    order = np.argsort(sc.doubling)
    assert np.all(np.diff(sc.lower_envelope[order]) >= 0)
    assert np.all(np.diff(sc.upper_envelope[order]) >= 0)
    assert np.all(sc.lower_envelope <= sc.length) and np.all(sc.length <= sc.upper_envelope)
    with pytest.raises(ValueError):
        nodal_measure_vs_doubling([_field(lambda x, y: x + 1.0)], (0, 0), 1.0)


def test_zero_cube_growth_is_monotone_in_K():
    u = sample_on_box(random_harmonic_sum(np.random.default_rng(8)), (-2, -2), (2, 2), 1 / 32)
    g = [zero_cube_growth(u, (0, 0), 1.0, 0.125, K) for K in (2.0, 4.0, 8.0)]
    assert g[0] <= g[1] <= g[2]
    K = calibrate_zero_cube_factor([u], (0, 0), 1.0, 0.125, K_max=24.0)
    assert zero_cube_growth(u, (0, 0), 1.0, 0.125, K) >= 2.0


def test_courant_bound_on_square():
    table = courant_table(square_domain(48), k=10)
    assert table.passed
    assert np.all(table.counts <= table.bounds)
    assert table.counts[0] == 1
    assert table.bounds[1] == table.bounds[2] == 2
