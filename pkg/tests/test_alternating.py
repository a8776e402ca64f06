import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_gaussians
from uniquemax.alternating import (NormEquivalence, SignBounds, alternation_report,
                                   estimate_norm_equivalence, extract_alternating, is_alternating,
                                   kernel_basis, restrict_to_ball, root_coefficients,
                                   separating_functional, sign_bounds, tail_radius)
from uniquemax.core import GaussianBump, LinearCombination, Subspace
from uniquemax.errors import (EnvelopeTooSlow, NotAlternating, PreconditionError, RankDeficient,
                              ZeroElementError)
from uniquemax.witness import witness_basis


def test_is_alternating(grid1, two_bumps):
    assert is_alternating(two_bumps, [1.0, -1.0], grid1)
    assert not is_alternating(two_bumps, [1.0, 1.0], grid1)
    with pytest.raises(ZeroElementError):
        is_alternating(two_bumps, [0.0, 0.0], grid1)


def test_disjoint_bumps_extract_a_difference(grid1, two_bumps):
    t = extract_alternating(two_bumps, grid1, seed=0)
    assert t.dim == 1
    _, C = root_coefficients(t)
    c = C[0]
    # g1 - lambda g2 with lambda > 0, up to sign
    assert c[0] * c[1] < 0
    assert alternation_report(t, grid1, 1000, 0)["failures"] == 0


def test_witness_basis_is_already_alternating(grid2):
    w = witness_basis(2)
    assert alternation_report(w, grid2)["failures"] == 0
    sep = separating_functional(w, grid2)
    assert sep.phase == "trivial"
    t = extract_alternating(w, grid2)
    assert t.dim == 1 and alternation_report(t, grid2)["failures"] == 0


def test_dependent_pair_rejected(grid1):
    b = GaussianBump((0.0,), 1.0)
    s = Subspace((b, LinearCombination((b,), np.array([-0.5]))), 1)
    with pytest.raises(RankDeficient):
        extract_alternating(s, grid1)


def test_extraction_needs_two_dimensions(grid1):
    with pytest.raises(PreconditionError):
        extract_alternating(Subspace((GaussianBump((0.0,), 1.0),), 1), grid1)


def test_kernel_basis():
    phi = np.array([1.0, 2.0, -2.0])
    K = kernel_basis(phi)
    np.testing.assert_allclose(K @ phi, 0.0, atol=1e-14)
    np.testing.assert_allclose(K @ K.T, np.eye(2), atol=1e-14)


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_extracted_subspaces_alternate(seed, m):
    from uniquemax.grid import build_grid

    g = build_grid(2, 17)
    s = random_gaussians(seed, 2, m)
    t = extract_alternating(s, g, seed)
    _, C = root_coefficients(t)
    assert t.dim == m - 1
    assert np.linalg.matrix_rank(C) == m - 1
    for probe_seed in range(10):
        assert alternation_report(t, g, 1000, probe_seed)["failures"] == 0


def test_norm_equivalence_monotone_in_probes(grid2):
    w = witness_basis(2)
    prev = None
    for k in (10, 100, 1000):
        eq = estimate_norm_equivalence(w, grid2, probes=k, seed=3)
        assert eq.C1 <= eq.C2
        if prev is not None:
            assert eq.C1 <= prev.C1 and eq.C2 >= prev.C2
        prev = eq
    # unit witness elements have sup norm exactly 1, which the grid can only undershoot
    assert eq.C1 >= 1.0 - 1e-12 and eq.C2 < 1.05


def test_sign_bounds_and_tail_for_witness(grid2):
    w = witness_basis(2)
    sb = sign_bounds(w, grid2, probes=50)
    # every unit element has max 1 and min -1
    assert sb.inf_max == pytest.approx(1.0, rel=1e-9)
    assert sb.sup_min == pytest.approx(-1.0, rel=1e-9)
    eq = estimate_norm_equivalence(w, grid2)
    tr = tail_radius(w, sb, eq, N=0.5)
    # envelope 1/R: smallest A with 2 * max(C2, 1) / A <= 0.5
    assert tr.A == pytest.approx(2 * max(eq.C2, 1.0) / 0.5, rel=1e-9)
    assert tr.far_field_max <= 0.5


def test_gaussian_tail_radius_oracle():
    # the A for a single-bump envelope inverts in closed form
    c, width = 0.8, 1.0
    s = Subspace((GaussianBump((c, 0.0), width, 1), GaussianBump((0.0, -c), width, -1)), 2)
    sb = SignBounds(-1.0, 1.0, 1)
    eq = NormEquivalence(0.7, 1.3)
    for N in (0.3, 0.1, 0.01, 1e-4):
        tr = tail_radius(s, sb, eq, N=N)
        expected = c + width * math.sqrt(math.log(2 * 1.3 / N))
        assert tr.A == pytest.approx(expected, rel=1e-9)


def test_tail_radius_preconditions(grid2):
    w = witness_basis(2)
    eq = NormEquivalence(1.0, 1.0)
    with pytest.raises(PreconditionError):
        tail_radius(w, SignBounds(-0.5, 0.4, 1), eq, N=0.45)
    with pytest.raises(PreconditionError):
        tail_radius(w, SignBounds(0.1, 0.4, 1), eq)
    with pytest.raises(EnvelopeTooSlow) as err:
        tail_radius(w, SignBounds(-1.0, 1.0, 1), eq, N=1e-14)
    assert err.value.index == 0


def test_sign_bounds_rejects_non_alternating(grid1, two_bumps):
    with pytest.raises(NotAlternating):
        sign_bounds(two_bumps, grid1)


def test_restrict_to_ball(grid2):
    w = witness_basis(2)
    r = restrict_to_ball(w, 2.0, grid2)
    X = np.array([[0.3, -0.4], [1.5, 0.2], [3.0, 0.0]])
    np.testing.assert_array_equal(r.evaluate(X)[:2], w.evaluate(X)[:2])
    assert np.all(r.evaluate(X)[2] == 0.0)
    far = Subspace((GaussianBump((3.0, 0.0), 0.3), GaussianBump((-3.0, 0.0), 0.3)), 2)
    with pytest.raises(RankDeficient, match="lost rank"):
        restrict_to_ball(far, 1e-9, grid2)
    with pytest.raises(PreconditionError):
        restrict_to_ball(w, 0.0)
