import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uniquemax.core import (GaussianBump, LinearCombination, ProjectionInversion, Restricted,
                            SampleTable, Subspace, as_coefs, as_point, basis_from_dict)
from uniquemax.errors import DimensionMismatch, PreconditionError, RankDeficient
from uniquemax.grid import build_grid
from uniquemax.witness import witness_basis


def table_2d():
    t = np.linspace(-2, 2, 9)
    X, Y = np.meshgrid(t, t, indexing="ij")
    return SampleTable(-2.0, 2.0, np.exp(-(X ** 2 + Y ** 2)) * (4 - X ** 2) * (4 - Y ** 2))


def all_families():
    g = GaussianBump((0.5, -0.5), 0.8, -1)
    return [ProjectionInversion(1, 2), g, table_2d(), Restricted(g, 1.5),
            LinearCombination((ProjectionInversion(0, 2), g), np.array([2.0, -1.0]), 0.5)]


def test_validation():
    with pytest.raises(DimensionMismatch):
        as_point([1.0, 2.0], 3)
    with pytest.raises(PreconditionError):
        as_coefs([np.nan])
    with pytest.raises(PreconditionError):
        GaussianBump((0.0,), -1.0)
    with pytest.raises(PreconditionError):
        GaussianBump((0.0,), 1.0, sign=2)
    with pytest.raises(PreconditionError):
        ProjectionInversion(2, 2)
    with pytest.raises(DimensionMismatch):
        Subspace((GaussianBump((0.0,), 1.0), GaussianBump((0.0, 1.0), 1.0)), 1)


@pytest.mark.parametrize("f", all_families(), ids=lambda f: f.family)
def test_single_and_batch_evaluation_agree(f):
    X = np.random.default_rng(1).normal(scale=2, size=(20, 2))
    batch = f(X)
    assert batch.shape == (20,)
    assert all(f(x) == pytest.approx(v, abs=1e-15) for x, v in zip(X, batch))
    with pytest.raises(DimensionMismatch):
        f(np.zeros(3))


@pytest.mark.parametrize("f", all_families(), ids=lambda f: f.family)
def test_envelope_bounds_far_field(f):
    rng = np.random.default_rng(2)
    for R in (0.5, 1.0, 2.0, 4.0, 8.0):
        U = rng.normal(size=(2000, 2))
        U /= np.linalg.norm(U, axis=1)[:, None]
        X = U * rng.uniform(R, 3 * R, 2000)[:, None]
        assert np.abs(f(X)).max() <= f.envelope(R) + 1e-12


@pytest.mark.parametrize("f", all_families(), ids=lambda f: f.family)
def test_lipschitz_bound_holds(f):
    L = f.lipschitz()
    if math.isinf(L):
        return
    rng = np.random.default_rng(3)
    X = rng.normal(scale=2, size=(3000, 2))
    Y = X + rng.normal(scale=0.05, size=X.shape)
    ratio = np.abs(f(X) - f(Y)) / np.linalg.norm(X - Y, axis=1)
    assert ratio.max() <= L * (1 + 1e-9)


@pytest.mark.parametrize("f", all_families(), ids=lambda f: f.family)
def test_basis_serialization_round_trip(f):
    g = basis_from_dict(json.loads(json.dumps(f.to_dict())), 2)
    X = np.random.default_rng(4).normal(size=(30, 2))
    np.testing.assert_array_equal(f(X), g(X))


def test_sample_table_is_normalized_and_zero_outside():
    f = table_2d()
    assert np.abs(f.values).max() == 1.0
    assert f(np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert f(np.array([2.5, 0.0])) == 0.0
    assert f.lipschitz() < math.inf


def test_restriction_matches_inside_and_vanishes_outside():
    g = GaussianBump((0.5,), 1.0)
    r = Restricted(g, 1.0)
    assert r(np.array([0.9])) == g(np.array([0.9]))
    assert r(np.array([1.1])) == 0.0


def test_subspace_json_round_trip(tmp_path):
    s = Subspace(tuple(all_families()), 2)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(s.to_dict()))
    t = Subspace.load(p)
    X = np.random.default_rng(5).normal(size=(40, 2))
    np.testing.assert_array_equal(s.evaluate(X), t.evaluate(X))
    assert t.to_dict() == s.to_dict()


def test_invalid_spec():
    with pytest.raises(PreconditionError):
        Subspace.from_dict({"basis": []})
    with pytest.raises(PreconditionError, match="unknown basis family"):
        Subspace.from_dict({"ambient_dim": 1, "basis": [{"family": "spline"}]})


def test_sample_cache_and_chunking_agree(monkeypatch):
    import uniquemax.core as core

    g = build_grid(2, 17)
    s = witness_basis(2)
    B = s.sample(g)
    assert s.sample(g) is B and not B.flags.writeable
    monkeypatch.setattr(core, "CHUNK_ROWS", 37)
    monkeypatch.setenv("UNIQUEMAX_THREADS", "4")
    np.testing.assert_array_equal(s.evaluate(g.points), B)


def test_gram_rank():
    g = build_grid(1, 33)
    b = GaussianBump((0.3,), 1.0)
    dependent = Subspace((b, LinearCombination((b,), np.array([-0.5]))), 1)
    with pytest.raises(RankDeficient) as err:
        dependent.check_rank(g)
    assert err.value.singular_values is not None
    assert witness_basis(1).check_rank(g)[-1] > 0.1


def test_shared_term_fast_path_matches_direct_evaluation():
    terms = (GaussianBump((0.0,), 1.0), GaussianBump((1.0,), 0.5), ProjectionInversion(0, 1))
    rng = np.random.default_rng(6)
    combos = tuple(LinearCombination(terms, rng.normal(size=3), 0.7) for _ in range(2))
    s = Subspace(combos, 1)
    X = rng.normal(scale=3, size=(100, 1))
    direct = np.column_stack([c._eval(X) for c in combos])
    np.testing.assert_allclose(s.evaluate(X), direct, rtol=1e-13, atol=1e-15)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_combine_is_linear(a):
    s = Subspace((GaussianBump((0.0,), 1.0), GaussianBump((1.0,), 0.5)), 1)
    X = np.linspace(-3, 3, 31)[:, None]
    np.testing.assert_allclose(s.combine(a)(X), s.evaluate(X) @ np.array(a), atol=1e-12)
