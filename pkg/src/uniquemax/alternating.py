"""Alternating elements and subspaces, and the quantitative sign/tail bounds.

An element is alternating when it takes a strictly negative and a strictly
positive value.  For a subspace whose probed elements all alternate this
module estimates the sign bounds sup m(g) < 0 < inf M(g), the equivalence
constants between coefficient and sup norms, and a tail radius A beyond which
every unit element stays below a threshold N.
"""
import math
from dataclasses import dataclass

import numpy as np

from .certifier import certify_max, compute_min
from .cone import constraint_rows, dual_functional, extreme_rays, max_min_functional, min_on_cone
from .core import LinearCombination, Subspace, as_coefs, is_zero
from .errors import (EnvelopeTooSlow, NotAlternating, PreconditionError, RankDeficient,
                     SeparationError, UniqueMaxError, ZeroElementError)
from .geometry import random_directions
from .grid import build_grid

HEURISTIC_SAMPLES = 2048
HEURISTIC_SLACK = 1e-6
SEPARATION_MARGIN = 1e-12
MAX_TAIL_RADIUS = 2.0 ** 40


@dataclass(frozen=True)
class SignBounds:
    sup_min: float
    inf_max: float
    probes: int
    seed: int = 0

    def to_dict(self):
        return {"sup_min": self.sup_min, "inf_max": self.inf_max, "probes": self.probes,
                "seed": self.seed}


@dataclass(frozen=True)
class NormEquivalence:
    C1: float
    C2: float
    probes: int = 0
    seed: int = 0

    def to_dict(self):
        return {"C1": self.C1, "C2": self.C2, "probes": self.probes, "seed": self.seed}


@dataclass(frozen=True)
class TailRadius:
    N: float
    A: float
    far_field_max: float = 0.0
    samples: int = 0
    probes: int = 0

    def to_dict(self):
        return {"N": self.N, "A": self.A, "far_field_max": self.far_field_max,
                "samples": self.samples, "probes": self.probes}


@dataclass(frozen=True)
class Separation:
    """A functional on coefficient space, strictly positive on the sampled nonnegative cone."""

    functional: np.ndarray
    margin: float
    phase: str
    rays: int = 0

    def to_dict(self):
        return {"functional": self.functional.tolist(), "margin": self.margin,
                "phase": self.phase, "rays": self.rays}


def unit_probes(seed, k, m):
    """k seeded points of the coefficient unit sphere; a prefix of a longer run is identical."""
    return random_directions(np.random.default_rng(seed), k, m)


def is_alternating(s, a, grid):
    a = as_coefs(a, s.dim)
    if is_zero(a):
        raise ZeroElementError("the zero element is not alternating")
    v = s.sample(grid) @ a
    return bool(v.min() < 0.0 < v.max())


def alternation_report(s, grid, probes=1000, seed=0):
    """Probe random nonzero elements; count those that fail to alternate on the grid."""
    A = unit_probes(seed, probes, s.dim)
    V = s.sample(grid) @ A.T
    lo, hi = V.min(axis=0), V.max(axis=0)
    bad = np.flatnonzero(~((lo < 0.0) & (hi > 0.0)))
    return {"probes": probes, "seed": seed, "failures": int(bad.size),
            "worst_min": float(lo.max()), "worst_max": float(hi.min()),
            "first_failure": A[bad[0]].tolist() if bad.size else None}


def estimate_norm_equivalence(s, grid, probes=1000, seed=0):
    """Constants C1 <= ||a|| / ||g_a||_inf <= C2 observed over unit coefficient probes."""
    s.check_rank(grid)
    A = unit_probes(seed, probes, s.dim)
    sup = np.abs(s.sample(grid) @ A.T).max(axis=0)
    if sup.min() < 1e-12:
        raise RankDeficient("grid cannot separate basis; raise resolution")
    ratio = 1.0 / sup
    return NormEquivalence(float(ratio.min()), float(ratio.max()), probes, seed)


def sign_bounds(s, grid, probes=100, seed=0):
    """sup over unit probes of min g and inf of max g, via the certifier on this grid."""
    A = unit_probes(seed, probes, s.dim)
    V = s.sample(grid) @ A.T
    for j in range(probes):
        if not V[:, j].min() < 0.0 < V[:, j].max():
            raise NotAlternating(A[j])
    mins = [compute_min(s, a, grid).value for a in A]
    maxs = [certify_max(s, a, grid).value for a in A]
    return SignBounds(float(max(mins)), float(min(maxs)), probes, seed)


def tail_radius(s, bounds, eq, N=None, samples=1000, probes=100, seed=0,
                max_radius=MAX_TAIL_RADIUS):
    """Threshold N and radius A with |g(x)| <= N for unit elements g and ||x|| > A.

    A comes from the basis decay envelopes: the first radius of a doubling
    search with m * C * max_i E_i(A) <= N, tightened by bisection, where
    C = max(C2, 1) bounds the coefficients of both unit-coefficient and
    unit-sup-norm elements.  The bound is then checked on ``samples`` far-field
    points in (A, 4A] for ``probes`` unit elements.
    """
    if not bounds.sup_min < 0.0 < bounds.inf_max:
        raise PreconditionError("tail radius needs sup_min < 0 < inf_max")
    limit = min(-bounds.sup_min, bounds.inf_max)
    if N is None:
        N = limit / 2.0
    elif not 0.0 < N < limit:
        raise PreconditionError(f"threshold N={N:g} must lie in (0, {limit:g}) = (0, min(-sup_min, inf_max))")
    m = s.dim
    C = max(eq.C2, 1.0)

    def bound(R):
        return m * C * max(f.envelope(R) for f in s.basis)

    R = 1.0
    while bound(R) > N:
        R *= 2.0
        if R > max_radius:
            worst = max(range(m), key=lambda i: s.basis[i].envelope(R))
            raise EnvelopeTooSlow(worst, s.basis[worst].family, max_radius)
    if R > 1.0:
        lo, hi = R / 2.0, R
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if bound(mid) <= N:
                hi = mid
            else:
                lo = mid
        R = hi

    rng = np.random.default_rng(seed)
    X = random_directions(rng, samples, s.ambient_dim) * rng.uniform(R, 4.0 * R, samples)[:, None]
    X = X[np.linalg.norm(X, axis=1) > R]
    A = unit_probes(seed + 1, probes, m)
    far = float(np.abs(s.evaluate(X) @ A.T).max()) if X.size else 0.0
    if far > N:
        raise UniqueMaxError(f"far-field check failed: |g| reached {far:.3e} > N={N:.3e} beyond A={R:g}")
    return TailRadius(float(N), float(R), far, int(X.shape[0]), probes)


def _heuristic_functional(B, H, seed):
    A = unit_probes(seed, HEURISTIC_SAMPLES, B.shape[1])
    V = B @ A.T
    members = np.vstack([A[V.min(axis=0) >= 0.0], -A[V.max(axis=0) <= 0.0]])
    if members.shape[0] == 0:
        return None
    phi = members.sum(axis=0)
    nphi = np.linalg.norm(phi)
    if nphi == 0.0:
        return None
    phi /= nphi
    if np.any(members @ phi < HEURISTIC_SLACK):
        return None
    margin = min_on_cone(phi, H)
    return phi, margin if margin > SEPARATION_MARGIN else None


def separating_functional(s, grid, seed=0):
    """A functional strictly positive on {a : g_a >= 0 on the grid} minus the origin.

    Phase 1 averages rejection-sampled cone members and accepts the result if
    an LP confirms it is strictly positive on the whole cone.  Phase 2 computes
    the cone's extreme rays by double description and maximizes the smallest
    ray value by linear programming; when the cone has too many rays, or the
    rays fail the check, it solves the equivalent dual LP instead.  The reported margin is always the LP
    minimum of the functional over {g >= 0 on the grid, w . a = 1}.
    """
    s.check_rank(grid)
    B = s.sample(grid)
    H = constraint_rows(B)
    found = _heuristic_functional(B, H, seed)
    if found is not None and found[1] is not None:
        phi, margin = found
        if math.isinf(margin):
            return Separation(phi, margin, "trivial")
        return Separation(phi, margin, "heuristic")
    try:
        rays = extreme_rays(H)
    except SeparationError:
        rays = None
    if rays is not None and rays.shape[0] == 0 and math.isinf(min_on_cone(np.ones(s.dim), H)):
        # the sampled cone is {0}: every nonzero element already alternates
        phi = np.zeros(s.dim)
        phi[0] = 1.0
        return Separation(phi, math.inf, "trivial")
    if rays is not None and rays.shape[0]:
        phi, t = max_min_functional(rays)
        if t > SEPARATION_MARGIN:
            phi = phi / np.linalg.norm(phi)
            margin = min_on_cone(phi, H)
            if margin > SEPARATION_MARGIN:
                return Separation(phi, margin, "double-description", rays.shape[0])
    # too many rays, or rays spoiled by rounding: solve the dual LP directly
    phi, t = dual_functional(H)
    if not t > SEPARATION_MARGIN:
        raise SeparationError(f"sampled cone is not pointed (best separation {t:.3e}); "
                              "raise the resolution")
    phi = phi / np.linalg.norm(phi)
    margin = min_on_cone(phi, H)
    if not margin > SEPARATION_MARGIN:
        raise SeparationError(f"separation check failed (margin {margin:.3e})")
    return Separation(phi, margin, "dual-lp", 0 if rays is None else rays.shape[0])


def kernel_basis(phi):
    """Orthonormal basis (rows) of the hyperplane orthogonal to phi."""
    _, _, Vt = np.linalg.svd(np.asarray(phi, dtype=float)[None, :])
    K = Vt[1:]
    flip = np.sign(K[np.arange(K.shape[0]), np.argmax(np.abs(K), axis=1)])
    return K * flip[:, None]


def root_coefficients(s):
    """Express the basis of s through a common root basis, if it has one.

    Returns (terms, C) with s.basis[i] = sum_j C[i, j] * terms[j].
    """
    members = s.basis
    if all(isinstance(f, LinearCombination) for f in members):
        terms = members[0].terms
        if all(f.terms is terms or f.terms == terms for f in members):
            return terms, np.array([f.effective_coefs for f in members])
    return members, np.eye(s.dim)


def extract_alternating(s, grid, seed=0, separation=None):
    """An (m-1)-dimensional subspace of s whose nonzero elements alternate on the grid.

    The result is the kernel of a functional that is strictly positive on the
    sampled nonnegative cone: no nonzero kernel element can be nonnegative or
    nonpositive on every grid point.  Its basis is expressed through the basis
    of s and normalized to unit grid sup-norm.
    """
    if s.dim < 2:
        raise PreconditionError("extraction needs a subspace of dimension >= 2")
    sep = separation or separating_functional(s, grid, seed)
    K = kernel_basis(sep.functional)
    B = s.sample(grid)
    sup = np.abs(B @ K.T).max(axis=0)
    terms, C = root_coefficients(s)
    basis = [LinearCombination(terms, k @ C, 1.0 / sup_k) for k, sup_k in zip(K, sup)]
    return Subspace(tuple(basis), s.ambient_dim)


def restrict_to_ball(s, A, grid=None, resolution=17):
    """Restrictions of the basis of s to the closed ball of radius A; rank must survive."""
    from .core import Restricted

    if not A > 0:
        raise PreconditionError("restriction radius must be positive")
    r = Subspace(tuple(Restricted(f, float(A)) for f in s.basis), s.ambient_dim)
    grid = grid or build_grid(s.ambient_dim, resolution)
    try:
        r.check_rank(grid)
    except RankDeficient as exc:
        raise RankDeficient(f"restriction to B_{A:g} lost rank: {exc}", exc.singular_values) from exc
    return r
