"""Search for elements with two well-separated, (nearly) equal global maxima.

A subspace of dimension n + 2 over R^n always contains such elements; the
pipeline below reduces it to an alternating (n + 1)-dimensional subspace,
confines the search to the ball outside which no element can reach its
maximum, and hunts over the coefficient sphere.  Candidate subspaces of
dimension n + 1 (the open case) can be probed the same way.

Results are empirical.  A violation witness is a concrete, re-checkable
element; an inconclusive run proves nothing.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri
from scipy.stats import qmc

from .alternating import (estimate_norm_equivalence, extract_alternating, restrict_to_ball,
                          root_coefficients, separating_functional, sign_bounds, tail_radius)
from .certifier import certify_max, default_cluster_radius, refine_point
from .core import GaussianBump, SampleTable, Subspace
from .errors import PreconditionError, UniqueMaxError
from .grid import build_grid
from .search import pattern_search, sphere_frame
from .witness import witness_basis

DEFAULT_TOL = 1e-3
DEFAULT_BUDGET = 10_000
MIN_BUDGET = 10
SCREEN_BATCH = 256
MAX_STARTS = 24
NEWTON_STEPS = 30
REFINE_EVALS = 200
VERIFY_FACTOR = 4
VERIFY_SLACK = 10.0
FAMILIES = ("gaussians", "witness+gaussians", "perturbed-witness")


@dataclass(frozen=True)
class ViolationWitness:
    """An element whose two peaks, ``separation`` apart, differ by ``gap`` relative to value1.

    ``coefs`` are coordinates in the searched subspace and ``original_coefs``
    the same element in the input subspace.
    """

    coefs: np.ndarray
    peak1: np.ndarray
    peak2: np.ndarray
    value1: float
    value2: float
    separation: float
    gap: float
    original_coefs: np.ndarray = None

    def to_dict(self):
        return {"coefs": self.coefs.tolist(), "peak1": self.peak1.tolist(),
                "peak2": self.peak2.tolist(), "value1": self.value1, "value2": self.value2,
                "separation": self.separation, "gap": self.gap,
                "original_coefs": None if self.original_coefs is None
                else self.original_coefs.tolist()}


@dataclass(frozen=True)
class ExperimentReport:
    ambient_dim: int
    candidate_dim: int
    family: object
    witness: object
    stats: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "violation-found" if self.witness is not None else "inconclusive"

    def to_dict(self):
        return {"ambient_dim": self.ambient_dim, "candidate_dim": self.candidate_dim,
                "family": self.family, "verdict": self.verdict,
                "witness": None if self.witness is None else self.witness.to_dict(),
                "stats": self.stats, "empirical": True}


# -- candidate families ------------------------------------------------------

def _random_gaussians(rng, n, k, spread=2.0):
    return [GaussianBump(tuple(rng.uniform(-spread, spread, n)), float(rng.uniform(0.5, 1.5)), 1)
            for _ in range(k)]


def _window_table(n, L, nodes, fn):
    t = np.linspace(-L, L, nodes)
    X = np.stack(np.meshgrid(*(t,) * n, indexing="ij"), -1).reshape(-1, n)
    window = np.prod(1.0 - (X / L) ** 2, axis=1)
    values = (fn(X) * window).reshape((nodes,) * n)
    return SampleTable(-L, L, values)


def family_subspace(family, n, dim, seed=0):
    """A seeded random candidate subspace of dimension ``dim`` in R^n from a named family.

    gaussians          translated and scaled positive Gaussian bumps
    witness+gaussians  the n inversion-projection functions plus dim - n bumps
    perturbed-witness  sample tables of windowed, randomly perturbed witness
                       functions plus windowed bump tables
    """
    rng = np.random.default_rng(seed)
    if family == "gaussians":
        return Subspace(tuple(_random_gaussians(rng, n, dim)), n)
    if family == "witness+gaussians":
        if dim < n:
            raise PreconditionError(f"witness+gaussians needs dim >= n = {n}")
        return Subspace(witness_basis(n).basis + tuple(_random_gaussians(rng, n, dim - n)), n)
    if family == "perturbed-witness":
        if n > 3:
            raise PreconditionError("perturbed-witness tables are limited to n <= 3")
        w = witness_basis(n)
        L, nodes = 4.0, {1: 129, 2: 65, 3: 17}[n]
        tables = []
        for i in range(dim):
            bumps = _random_gaussians(rng, n, 2)
            amp = rng.uniform(-0.2, 0.2, 2)
            if i < n:
                base = w.basis[i]
                fn = (lambda X, b=base, g=bumps, c=amp:
                      b._eval(X) + c[0] * g[0]._eval(X) + c[1] * g[1]._eval(X))
            else:
                fn = (lambda X, g=bumps, c=amp:
                      g[0]._eval(X) + c[1] * g[1]._eval(X))
            tables.append(_window_table(n, L, nodes, fn))
        return Subspace(tuple(tables), n)
    raise PreconditionError(f"unknown family {family!r}; choose one of {', '.join(FAMILIES)}")


# -- the search ---------------------------------------------------------------

class _Searcher:
    """Gap evaluations for one subspace on a (possibly confined) set of grid points."""

    def __init__(self, s, grid, points, radius, tol):
        self.s = s
        self.grid = grid
        self.points = points
        self.B = np.ascontiguousarray(s.evaluate(points)) if points.shape[0] else np.zeros((0, s.dim))
        self.radius = radius
        self.tol = tol
        k = min(3 ** s.ambient_dim, points.shape[0])
        _, nb = cKDTree(points).query(points, k=k)
        self.neighbours = nb[:, 1:]
        self.probes = 0

    def screen(self, A):
        """Grid gap (relative) and the two peak indices for each row of A."""
        V = self.B @ A.T
        k = V.shape[1]
        self.probes += k
        gaps = np.full(k, math.inf)
        pairs = np.full((k, 2), -1)
        if self.neighbours.shape[1] == 0:
            return gaps, pairs
        local = np.all(V[:, None, :] >= V[self.neighbours], axis=1)
        for j in range(k):
            v = V[:, j]
            i1 = int(np.argmax(v))
            if v[i1] <= 0.0:
                continue
            cand = np.flatnonzero(local[:, j])
            far = cand[np.linalg.norm(self.points[cand] - self.points[i1], axis=1) > self.radius]
            if far.size == 0:
                continue
            i2 = int(far[np.argmax(v[far])])
            gaps[j] = (v[i1] - v[i2]) / v[i1]
            pairs[j] = (i1, i2)
        return gaps, pairs

    def _step(self, x):
        return 0.25 * self.grid.spacing * max(1.0, float(x @ x))

    def peaks(self, a, x1, x2):
        self.probes += 1
        r1 = refine_point(self.s, a, x1, self._step(x1), REFINE_EVALS)
        r2 = refine_point(self.s, a, x2, self._step(x2), REFINE_EVALS)
        return r1, r2

    def newton(self, a, x1, x2, budget):
        """Drive the two tracked peak values together by moving a on the sphere.

        The difference of the two local maxima has gradient F(x1) - F(x2) in a
        (F = basis values), so each step solves the linearized equation.
        Returns (gap, a, x1, v1, x2, v2) for the best iterate, or None.
        """
        best = None
        for _ in range(min(NEWTON_STEPS, budget)):
            r1, r2 = self.peaks(a, x1, x2)
            x1, x2 = r1.x, r2.x
            if np.linalg.norm(x1 - x2) < self.radius:
                break
            top = max(r1.value, r2.value)
            if top <= 0.0:
                break
            d = r1.value - r2.value
            gap = abs(d) / top
            if best is None or gap < best[0]:
                best = (gap, a.copy(), x1.copy(), r1.value, x2.copy(), r2.value)
            if gap <= 1e-4 * self.tol:
                break
            F = self.s.evaluate(np.vstack([x1, x2]))
            dF = F[0] - F[1]
            nd = float(dF @ dF)
            if nd == 0.0:
                break
            a = a - d * dF / nd
            a = a / np.linalg.norm(a)
        return best

    def pattern(self, a, x1, x2, budget):
        """Fallback: pattern search over the coefficient sphere on the refined relative gap."""
        state = {"x1": x1, "x2": x2}

        def objective(b):
            r1, r2 = self.peaks(b, state["x1"], state["x2"])
            if np.linalg.norm(r1.x - r2.x) < self.radius or max(r1.value, r2.value) <= 0.0:
                return -math.inf
            return -abs(r1.value - r2.value) / max(r1.value, r2.value)

        res = pattern_search(objective, a, 0.05, budget=budget, frame=sphere_frame, model=False)
        if not math.isfinite(res.value):
            return None
        r1, r2 = self.peaks(res.x, x1, x2)
        top = max(r1.value, r2.value)
        if np.linalg.norm(r1.x - r2.x) < self.radius or top <= 0.0:
            return None
        return (abs(r1.value - r2.value) / top, res.x, r1.x, r1.value, r2.x, r2.value)


def _sphere_points(m, count, seed):
    """Scrambled Sobol points mapped to the unit sphere of R^m."""
    sob = qmc.Sobol(m, scramble=True, seed=np.random.default_rng(seed))
    U = sob.random(count)
    Z = ndtri(np.clip(U, 1e-12, 1.0 - 1e-12))
    return Z / np.linalg.norm(Z, axis=1)[:, None]


def reduce_to(s, grid, target_dim, seed=0):
    """Repeated alternating extraction down to ``target_dim``; returns (subspace, separations)."""
    seps = []
    while s.dim > target_dim:
        sep = separating_functional(s, grid, seed)
        seps.append(sep)
        s = extract_alternating(s, grid, seed, separation=sep)
    return s, seps


def _witness_from(s, grid, radius, a, x1, x2, original):
    """Assemble a witness whose value1 is the certified maximum of the element."""
    cert = certify_max(s, a, grid, cluster_radius=radius)
    if cert.argmax is None:
        return None
    p1 = cert.argmax
    # the other peak is the tracked one farther from the certified argmax
    other = x2 if np.linalg.norm(x1 - p1) <= np.linalg.norm(x2 - p1) else x1
    v2 = float(s.evaluate(other[None, :])[0] @ a)
    sep = float(np.linalg.norm(p1 - other))
    if sep < radius or cert.value <= 0.0:
        return None
    gap = abs(cert.value - v2) / cert.value
    return ViolationWitness(np.asarray(a, float), p1, other, cert.value, v2, sep, gap, original)


def verify_witness(s, w, grid, factor=VERIFY_FACTOR, tol=DEFAULT_TOL):
    """Re-check a witness on a grid ``factor`` times finer than ``grid``.

    The finer grid's best value near each peak must reproduce value1 and
    value2, and no sample anywhere may beat value1, all within
    ``VERIFY_SLACK * tol`` relative to value1.
    """
    fine = build_grid(grid.n, factor * (grid.resolution - 1) + 1)
    v = s.sample(fine) @ w.coefs
    P = fine.points
    scale = abs(w.value1)
    slack = VERIFY_SLACK * tol * scale
    near1 = np.linalg.norm(P - w.peak1, axis=1) <= default_cluster_radius(fine)
    near2 = np.linalg.norm(P - w.peak2, axis=1) <= default_cluster_radius(fine)
    m1 = max(float(v[near1].max(initial=-math.inf)), float(s.evaluate(w.peak1[None, :])[0] @ w.coefs))
    m2 = max(float(v[near2].max(initial=-math.inf)), float(s.evaluate(w.peak2[None, :])[0] @ w.coefs))
    top = float(v.max())
    ok = abs(m1 - w.value1) <= slack and abs(m2 - w.value2) <= slack and top <= w.value1 + slack
    return {"passed": bool(ok), "resolution": fine.resolution, "value1": m1, "value2": m2,
            "grid_max": top}


def falsify(s, grid, tol_gap=DEFAULT_TOL, budget=DEFAULT_BUDGET, seed=0, mode="extract",
            cluster_radius=None, family=None, verify=True):
    """Hunt for an element of s with two separated near-equal maxima.

    ``mode="extract"`` needs dim(s) >= n + 2 and runs the full pipeline:
    extraction to an alternating (n + 1)-dimensional subspace, sign bounds,
    tail radius A and confinement to the ball B_A.  ``mode="conjecture"``
    accepts dim(s) >= n + 1 and searches s itself on the whole grid.
    ``budget`` caps the number of coefficient vectors evaluated.
    """
    n = s.ambient_dim
    if grid.n != n:
        raise PreconditionError(f"grid is {grid.n}-dimensional but the subspace lives in R^{n}")
    if not tol_gap > 0:
        raise PreconditionError("tol_gap must be positive")
    if budget < MIN_BUDGET:
        raise PreconditionError(f"budget must be >= {MIN_BUDGET}")
    if mode not in ("extract", "conjecture"):
        raise PreconditionError(f"unknown mode {mode!r}")
    need = n + 2 if mode == "extract" else n + 1
    if s.dim < need:
        raise PreconditionError(f"{mode} mode needs dim(s) >= {need} in R^{n}, got {s.dim}")
    radius = default_cluster_radius(grid) if cluster_radius is None else float(cluster_radius)
    stats = {"mode": mode, "seed": seed, "budget": budget, "tol_gap": tol_gap,
             "grid_resolution": grid.resolution, "cluster_radius": radius}

    s.check_rank(grid)
    if mode == "extract":
        t, seps = reduce_to(s, grid, n + 1, seed)
        stats["separation_phases"] = [p.phase for p in seps]
        eq = estimate_norm_equivalence(t, grid, seed=seed)
        bounds = sign_bounds(t, grid, seed=seed)
        tail = tail_radius(t, bounds, eq, seed=seed)
        restrict_to_ball(t, tail.A, grid)
        stats.update(sign_bounds=bounds.to_dict(), norm_equivalence=eq.to_dict(),
                     tail_radius=tail.to_dict())
        points = grid.points[grid.radii <= tail.A]
    else:
        t = s
        points = grid.points
    terms, C = _coefficients_in(s, t)

    search = _Searcher(t, grid, points, radius, tol_gap)
    m = t.dim
    screen_count = max(MIN_BUDGET // 2, min(budget // 2, 4096))
    A = _sphere_points(m, 1 << max(1, math.ceil(math.log2(screen_count))), seed)[:screen_count]
    gaps = np.empty(0)
    pairs = np.empty((0, 2), dtype=int)
    for lo in range(0, A.shape[0], SCREEN_BATCH):
        g, p = search.screen(A[lo:lo + SCREEN_BATCH])
        gaps = np.concatenate([gaps, g])
        pairs = np.vstack([pairs, p])
    finite = np.flatnonzero(np.isfinite(gaps))
    order = finite[np.lexsort((np.arange(finite.size), gaps[finite]))]
    stats["screened"] = int(A.shape[0])
    stats["best_grid_gap"] = float(gaps[order[0]]) if order.size else None

    best, witness, starts = None, None, 0
    for j in order[:MAX_STARTS]:
        left = budget - search.probes
        if left <= 0:
            break
        starts += 1
        i1, i2 = pairs[j]
        x1, x2 = points[i1].copy(), points[i2].copy()
        found = search.newton(A[j].copy(), x1, x2, left)
        if found is None or found[0] > tol_gap:
            left = budget - search.probes
            if left > 2:
                a0 = found[1] if found is not None else A[j].copy()
                fb = search.pattern(a0, x1, x2, min(left - 1, 60))
                if fb is not None and (found is None or fb[0] < found[0]):
                    found = fb
        if found is None:
            continue
        if best is None or found[0] < best[0]:
            best = found
        if found[0] <= tol_gap:
            cand = _witness_from(t, grid, radius, found[1], found[2], found[4],
                                 C.T @ found[1] if C is not None else None)
            if cand is not None and cand.gap <= tol_gap:
                witness = cand
                break
    stats["starts"] = starts
    stats["probes"] = search.probes
    stats["best_gap"] = (witness.gap if witness is not None
                         else (best[0] if best is not None else stats["best_grid_gap"]))
    stats["searched_basis"] = None if C is None else C.tolist()
    if witness is not None and verify:
        stats["verification"] = verify_witness(t, witness, grid, tol=tol_gap)
    return ExperimentReport(n, s.dim, family, witness, stats)


def _coefficients_in(s, t):
    """Matrix C with t.basis[i] = sum_j C[i, j] s.basis[j], when t was extracted from s."""
    if t is s:
        return None, np.eye(s.dim)
    terms, C = root_coefficients(t)
    if len(terms) == s.dim and all(a is b for a, b in zip(terms, s.basis)):
        return terms, C
    return None, None


def conjecture_probe(n, family, trials, seed=0, resolution=33, tol_gap=DEFAULT_TOL,
                     budget=DEFAULT_BUDGET):
    """Probe ``trials`` random (n + 1)-dimensional candidates of a family; empirical only."""
    if n < 2:
        raise PreconditionError("the conjecture is stated for n >= 2")
    if family not in FAMILIES:
        raise PreconditionError(f"unknown family {family!r}; choose one of {', '.join(FAMILIES)}")
    if trials < 0:
        raise PreconditionError("trials must be nonnegative")
    if trials == 0:
        return []
    grid = build_grid(n, resolution)
    reports = []
    for k in range(trials):
        s = family_subspace(family, n, n + 1, seed + k)
        desc = {"name": family, "seed": seed + k, "dim": n + 1}
        try:
            reports.append(falsify(s, grid, tol_gap, budget, seed + k, mode="conjecture",
                                   family=desc))
        except UniqueMaxError as exc:
            reports.append(ExperimentReport(n, n + 1, desc, None, {"error": str(exc)}))
    return reports


__all__ = ["ExperimentReport", "FAMILIES", "ViolationWitness", "conjecture_probe",
           "family_subspace", "falsify", "reduce_to", "restrict_to_ball",
           "verify_witness"]
