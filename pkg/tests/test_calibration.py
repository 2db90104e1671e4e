import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uclab.calibration import (MASK_KINDS, Calibration, fit_alpha, harmonic_family, random_mask, scaled_to_eps,
                               smallest_halving_J)


@pytest.fixture(scope="module")
def family():
    return harmonic_family(123, count=6, h=1 / 32)


def test_family_is_seeded(family):
    again = harmonic_family(123, count=6, h=1 / 32)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(family, again))
    assert not np.array_equal(family[0].values, harmonic_family(124, count=1, h=1 / 32)[0].values)


@given(st.sampled_from(MASK_KINDS), st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_masks_cover_enough_of_Q(kind, seed):
    u = harmonic_family(5, count=1, h=1 / 32)[0]
    E = random_mask(u, np.random.default_rng(seed), kind)
    Q = u.cube((0, 0), 1.0) & u.defined
    assert not np.any(E & ~Q)
    assert E.sum() >= 0.05 * Q.sum()


def test_unknown_mask_kind(family):
    with pytest.raises(ValueError):
        random_mask(family[0], np.random.default_rng(0), "spiral")


def test_scaling_to_eps(family):
    u = family[0]
    E = u.cube((0, 0), 0.25)
    v = scaled_to_eps(u, E, 1e-6)
    assert float(np.abs(v.values[E]).max()) == pytest.approx(1e-6, rel=1e-12)


def test_fit_alpha_is_largest_admissible():
    pts = [(-2.0, -1.0 + math.log(2)), (-4.0, -1.0 + math.log(2))]
    # y - log 2 = -1: ratios 1/2 and 1/4, the smaller wins before the margin
    assert fit_alpha(pts, 2.0) == pytest.approx(0.8 * 0.25)
    assert fit_alpha([], 2.0) == 1.0


def test_halving_J_for_small_family(family):
    J = smallest_halving_J(family[:2], J_values=[8])
    assert J in (8, None)


def test_save_load_roundtrip(tmp_path):
    c = Calibration("1.0", 1, {"count": 1}, {"remez_C": 2.0}, {})
    c.save(tmp_path / "c.json")
    back = Calibration.load(tmp_path / "c.json")
    assert back.to_json() == c.to_json() and back["remez_C"] == 2.0
    with pytest.raises(FileNotFoundError):
        Calibration.load(tmp_path / "none.json")
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ValueError):
        Calibration.load(tmp_path / "bad.json")
