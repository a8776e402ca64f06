import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uniquemax.cone import (constraint_rows, dual_functional, extreme_rays, max_min_functional,
                            min_on_cone)
from uniquemax.errors import SeparationError


def as_set(R):
    return {tuple(np.round(r, 9)) for r in R}


def test_orthant_rays():
    R = extreme_rays(np.eye(3))
    assert as_set(R) == as_set(np.eye(3))


def test_redundant_constraint_is_ignored():
    H = constraint_rows(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0], [0.0, 0.0]]))
    assert H.shape == (3, 2)
    assert as_set(extreme_rays(H)) == {(1.0, 0.0), (0.0, 1.0)}


def test_square_cone_in_three_dimensions():
    # {a : a_3 >= |a_1|, a_3 >= |a_2|}: four rays (+-1, +-1, 1)/sqrt(3)
    H = np.array([[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]], float)
    R = extreme_rays(constraint_rows(H))
    expected = {tuple(np.round(np.array([x, y, 1.0]) / np.sqrt(3), 9)) for x in (-1, 1) for y in (-1, 1)}
    assert as_set(R) == expected
    phi, t = max_min_functional(R)
    assert t > 0
    assert min_on_cone(phi, constraint_rows(H)) > 0


def test_trivial_cone_has_no_rays():
    H = constraint_rows(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0]]))
    assert extreme_rays(H).shape == (0, 2)
    assert min_on_cone(np.array([1.0, 0.0]), H) == np.inf


def test_cone_containing_a_line():
    with pytest.raises(SeparationError, match="not pointed"):
        extreme_rays(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


@given(st.integers(0, 10_000), st.integers(2, 5))
def test_rays_satisfy_constraints_and_lps_agree(seed, m):
    rng = np.random.default_rng(seed)
    # rows with positive first coordinate: e_1 is interior, so the cone is nontrivial
    B = rng.normal(size=(30, m))
    B[:, 0] = np.abs(B[:, 0]) + 0.1
    H = constraint_rows(B)
    R = extreme_rays(H)
    assert (H @ R.T).min() >= -1e-9
    # each ray is tight on at least m - 1 constraints
    assert all(np.sum(np.abs(H @ r) <= 1e-8) >= m - 1 for r in R)
    phi, t = max_min_functional(R)
    psi, u = dual_functional(H)
    assert t > 0 and u > 0
    assert min_on_cone(phi / np.linalg.norm(phi), H) > 0
    assert min_on_cone(psi, H) == pytest.approx(u, rel=1e-6, abs=1e-9)
