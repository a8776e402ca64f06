import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_gaussians
from uniquemax.certifier import brute_force_argmax, canonical_direction, certify_max, compute_min
from uniquemax.core import GaussianBump, ProjectionInversion, Subspace
from uniquemax.errors import BudgetExceeded, DimensionMismatch, PreconditionError, ZeroElementError
from uniquemax.grid import build_grid
from uniquemax.witness import witness_basis


def test_witness_certificate(grid2):
    c = certify_max(witness_basis(2), [3.0, 4.0], grid2)
    assert c.unique and c.cluster_count == 1
    np.testing.assert_allclose(c.argmax, [0.6, 0.8], atol=1e-7)
    assert c.value == pytest.approx(5.0, rel=1e-12)
    assert c.margin > 0
    assert c.refined and c.grid_resolution == 33


def test_two_equal_bumps_are_not_unique(grid1, two_bumps):
    c = certify_max(two_bumps, [1.0, 1.0], grid1)
    assert c.cluster_count == 2 and not c.unique
    assert c.margin == 0.0
    xs = sorted(p[0][0] for p in c.cluster_peaks)
    assert xs[0] < -1 and xs[1] > 1


def test_unequal_bumps_margin(grid1, two_bumps):
    c = certify_max(two_bumps, [1.0, 0.5], grid1)
    assert c.unique
    assert c.argmax[0] == pytest.approx(-1.5, abs=1e-6)
    # margin is measured against every grid point outside the cluster radius,
    # including the shoulder of the winning bump itself
    v = two_bumps.sample(grid1) @ canonical_direction(np.array([1.0, 0.5]))
    best = v.max()
    near = np.abs(grid1.points[:, 0] - grid1.points[np.argmax(v), 0]) <= c.cluster_radius
    refined = two_bumps.evaluate(c.argmax[None, :])[0] @ canonical_direction(np.array([1.0, 0.5]))
    expected = np.linalg.norm([1.0, 0.5]) * (refined - v[~near].max())
    assert c.margin == pytest.approx(expected, rel=1e-12)
    assert 0 < c.margin < 0.5 and best <= refined


def test_negative_element_peaks_at_infinity(grid1):
    s = Subspace((GaussianBump((0.0,), 1.0, -1),), 1)
    c = certify_max(s, [1.0], grid1)
    assert c.at_infinity and c.argmax is None and c.cluster_count == 0 and c.value == 0.0
    m = compute_min(s, [1.0], grid1)
    assert m.value == pytest.approx(-1.0) and m.argmin[0] == pytest.approx(0.0, abs=1e-6)
    assert compute_min(s, [-1.0], grid1).at_infinity


def test_certifier_errors(grid1, grid2):
    with pytest.raises(ZeroElementError):
        certify_max(witness_basis(2), [0.0, 0.0], grid2)
    with pytest.raises(DimensionMismatch):
        certify_max(witness_basis(2), [1.0, 0.0], grid1)
    with pytest.raises(DimensionMismatch):
        certify_max(witness_basis(2), [1.0], grid2)
    with pytest.raises(PreconditionError):
        certify_max(witness_basis(2), [1.0, 0.0], grid2, cluster_radius=0.0)


def test_brute_force_oracle():
    s = witness_basis(2)
    x, v = brute_force_argmax(s, [3.0, 4.0], 2.0, 401)
    assert v == pytest.approx(5.0, rel=1e-3)
    assert np.linalg.norm(x - [0.6, 0.8]) < 0.02
    with pytest.raises(BudgetExceeded):
        brute_force_argmax(witness_basis(5), np.ones(5), 1.0, 1000)


def test_cluster_radius_controls_merging(grid1, two_bumps):
    c = certify_max(two_bumps, [1.0, 1.0], grid1, cluster_radius=10.0)
    assert c.cluster_count == 1


@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_scale_invariance(seed, lam):
    rng = np.random.default_rng(seed)
    s = random_gaussians(seed, 1, 3)
    g = build_grid(1, 33)
    a = rng.normal(size=3)
    c1, c2 = certify_max(s, a, g), certify_max(s, lam * a, g)
    assert canonical_direction(a).tolist() == canonical_direction(lam * a).tolist()
    if c1.argmax is None:
        assert c2.argmax is None
    else:
        assert np.array_equal(c1.argmax, c2.argmax)
        assert c2.value == pytest.approx(lam * c1.value, rel=1e-12)


@given(st.integers(0, 10_000))
def test_matches_brute_force_in_one_dimension(seed):
    s = random_gaussians(seed, 1, 3)
    a = np.random.default_rng(seed + 1).normal(size=3)
    c = certify_max(s, a, build_grid(1, 33))
    x, v = brute_force_argmax(s, a, 8.0, 20001)
    L = sum(abs(ai) * f.lipschitz() for ai, f in zip(a, s.basis))
    assert abs(c.value - max(v, 0.0)) <= L * 16.0 / 20000 / 2 + 1e-12


def test_projection_inversion_kink_is_refined(grid2):
    # the maximum sits on the seam where the element has a kink
    s = Subspace((ProjectionInversion(0, 2), ProjectionInversion(1, 2)), 2)
    a = np.array([math.cos(0.3), math.sin(0.3)])
    c = certify_max(s, a, grid2)
    assert np.linalg.norm(c.argmax - a) < 1e-6
