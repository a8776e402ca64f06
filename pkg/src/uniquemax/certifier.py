"""Grid-based global maximum certificates with a uniqueness margin.

The certifier evaluates an element on a :class:`~uniquemax.grid.TwoChartGrid`,
groups near-maximal samples into clusters, and polishes the winner with a
pattern search that can step along the chart seam (the unit sphere), where
elements built from the inversion extension have a ridge.

Grid decisions are made on a quantized unit direction of the coefficient
vector, so positive rescalings of ``a`` give bit-identical argmax locations.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .core import as_coefs, is_zero
from .errors import BudgetExceeded, DimensionMismatch, PreconditionError, ZeroElementError
from .search import Frame, pattern_search, tangent_basis

MARGIN_FLOOR = 1e-6
CLUSTER_CELLS = 3
REFINE_BUDGET = 200
REFINE_CONTRACTION = 0.5
DIRECTION_DECIMALS = 10
BRUTE_MAX_POINTS = 20_000_000
SEAM_TOL = 1e-14


@dataclass(frozen=True)
class MaxCertificate:
    argmax: object
    value: float
    margin: float
    cluster_radius: float
    cluster_count: int
    grid_resolution: int
    refined: bool
    at_infinity: bool = False
    cluster_peaks: tuple = ()

    @property
    def unique(self):
        return self.cluster_count == 1

    def to_dict(self):
        return {
            "argmax": None if self.argmax is None else [float(v) for v in self.argmax],
            "value": self.value,
            "margin": self.margin,
            "cluster_radius": self.cluster_radius,
            "cluster_count": self.cluster_count,
            "grid_resolution": self.grid_resolution,
            "refined": self.refined,
            "at_infinity": self.at_infinity,
            "cluster_peaks": [{"point": [float(v) for v in p], "value": v}
                              for p, v in self.cluster_peaks],
        }


@dataclass(frozen=True)
class MinResult:
    argmin: object
    value: float
    at_infinity: bool = False

    def to_dict(self):
        return {"argmin": None if self.argmin is None else [float(v) for v in self.argmin],
                "value": self.value, "at_infinity": self.at_infinity}


def canonical_direction(a):
    """a/||a|| rounded to a fixed decimal lattice (identical for a and c*a, c > 0)."""
    return np.round(a / np.linalg.norm(a), DIRECTION_DECIMALS)


def default_cluster_radius(grid):
    return CLUSTER_CELLS * grid.cell_diameter


def _check(s, a, grid):
    a = as_coefs(a, s.dim)
    if grid.n != s.ambient_dim:
        raise DimensionMismatch(s.ambient_dim, grid.n, what="grid")
    if len(grid) == 0:
        raise PreconditionError("empty grid")
    if is_zero(a):
        raise ZeroElementError()
    return a


def seam_frame(x):
    """Poll frame that follows the unit sphere, the seam between the two charts.

    On the sphere: tangent moves retracted onto it plus one radial direction
    (kept out of the model step, since witness-type elements have a kink
    there).  Off the sphere: coordinate moves, with any move that crosses the
    sphere projected onto it.
    """
    n = x.size
    r2 = float(x @ x)
    if abs(r2 - 1.0) <= SEAM_TOL:
        u = x / math.sqrt(r2)
        T = tangent_basis(u)

        def move(t):
            y = u + t[: n - 1] @ T
            return y / math.sqrt(float(y @ y)) * (1.0 + t[n - 1])

        return Frame(n, move, (True,) * (n - 1) + (False,))

    def move(t):
        y = x + t
        ry2 = float(y @ y)
        if (r2 - 1.0) * (ry2 - 1.0) < 0.0:
            return y / math.sqrt(ry2)
        return y

    return Frame(n, move, (True,) * n)


def refine_point(s, d, x0, step, budget=REFINE_BUDGET, sign=1.0):
    """Polish a grid maximizer of sign * <d, basis(x)> with a seam-aware pattern search."""
    def fun(x):
        return sign * float(s.evaluate(x[None, :])[0] @ d)

    return pattern_search(fun, x0, step, budget=budget, contraction=REFINE_CONTRACTION,
                          frame=seam_frame)


def _initial_step(grid, x):
    return 0.5 * grid.spacing * max(1.0, float(x @ x))


def _pick_best(values, points):
    """Index of the largest value; exact ties go to the lexicographically smallest point."""
    best = values.max()
    tied = np.flatnonzero(values == best)
    if tied.size == 1:
        return int(tied[0])
    P = points[tied]
    return int(tied[np.lexsort(P.T[::-1])[0]])


def _within(points, centers, radius):
    if len(centers) <= 32:
        mask = np.zeros(points.shape[0], dtype=bool)
        r2 = radius * radius
        for c in centers:
            D = points - c
            mask |= np.einsum("ij,ij->i", D, D) <= r2
        return mask
    dist, _ = cKDTree(centers).query(points, distance_upper_bound=radius)
    return np.isfinite(dist)


def _outside_best(values, points, centers, radius, best, spread):
    """Largest value among points farther than ``radius`` from every center.

    Scans super-level sets {v >= best - delta} with growing delta until one of
    them reaches outside the excluded balls.
    """
    delta = 1e-3 * spread
    while True:
        idx = np.flatnonzero(values >= best - delta)
        outside = ~_within(points[idx], centers, radius)
        if outside.any():
            return float(values[idx[outside]].max())
        if idx.size == values.size:
            return -math.inf
        delta *= 4.0


def _clusters(points, values, radius):
    """Single-linkage clusters of the candidate points, ordered by peak then position."""
    k = points.shape[0]
    if k == 1:
        return [np.array([0])]
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(k, k))
    ncomp, labels = connected_components(graph, directed=False)
    groups = [np.flatnonzero(labels == c) for c in range(ncomp)]
    peaks = [g[_pick_best(values[g], points[g])] for g in groups]
    order = sorted(range(ncomp),
                   key=lambda c: (-values[peaks[c]], tuple(points[peaks[c]])))
    return [groups[c] for c in order]


def grid_values(s, d, grid):
    return s.sample(grid) @ d


def certify_max(s, a, grid, cluster_radius=None, refine=True, margin_floor=MARGIN_FLOOR,
                budget=REFINE_BUDGET):
    """Certify the global maximum of sum_i a_i f_i over the grid.

    Samples within ``margin_floor * sup|g|`` of the best grid value are
    clustered at distance ``cluster_radius``; the element is certified to have
    a unique maximum iff there is a single cluster.  A synthetic sample of
    value 0 stands for the point at infinity: if no grid value is positive the
    supremum is reported as attained only there.
    """
    a = _check(s, a, grid)
    radius = default_cluster_radius(grid) if cluster_radius is None else float(cluster_radius)
    if not radius > 0:
        raise PreconditionError("cluster radius must be positive")
    scale = float(np.linalg.norm(a))
    d = canonical_direction(a)
    v = grid_values(s, d, grid)
    points = grid.points
    ib = _pick_best(v, points)
    best = float(v[ib])
    if best <= 0.0:
        return MaxCertificate(None, 0.0, 0.0, radius, 0, grid.resolution, False, at_infinity=True)

    spread = max(best, -float(v.min()))
    floor = margin_floor * spread
    cand = np.flatnonzero(v >= best - floor)
    groups = _clusters(points[cand], v[cand], radius)
    peaks = []
    for g in groups:
        j = cand[g][_pick_best(v[cand[g]], points[cand[g]])]
        peaks.append((points[j].copy(), scale * float(v[j])))
    winners = points[cand[groups[0]]]

    x_best = points[ib].copy()
    vd = best
    if refine:
        res = refine_point(s, d, x_best, _initial_step(grid, x_best), budget)
        if res.value > best:
            x_best, vd = res.x, res.value
    value = float(s.evaluate(x_best[None, :])[0] @ a)

    margin = 0.0
    if len(groups) == 1:
        # the point at infinity (value 0) is outside every cluster
        rest = max(_outside_best(v, points, winners, radius, best, spread), 0.0)
        margin = scale * (vd - rest)
    return MaxCertificate(x_best, value, margin, radius, len(groups), grid.resolution,
                          refine, cluster_peaks=tuple(peaks))


def compute_min(s, a, grid, refine=True, budget=REFINE_BUDGET):
    """Global minimum of sum_i a_i f_i over the grid and the point at infinity."""
    a = _check(s, a, grid)
    d = canonical_direction(a)
    v = grid_values(s, d, grid)
    i = _pick_best(-v, grid.points)
    if v[i] >= 0.0:
        return MinResult(None, 0.0, at_infinity=True)
    x = grid.points[i].copy()
    if refine:
        res = refine_point(s, d, x, _initial_step(grid, x), budget, sign=-1.0)
        if -res.value < v[i]:
            x = res.x
    return MinResult(x, float(s.evaluate(x[None, :])[0] @ a))


def brute_force_argmax(s, a, box_half_width, samples_per_axis, max_points=BRUTE_MAX_POINTS):
    """Exhaustive lattice maximum over [-w, w]^n; an independent check on :func:`certify_max`."""
    a = as_coefs(a, s.dim)
    n = s.ambient_dim
    k = int(samples_per_axis)
    if k < 2 or not box_half_width > 0:
        raise PreconditionError("need samples_per_axis >= 2 and a positive box half-width")
    if n * math.log(k) > math.log(max_points / n):
        raise BudgetExceeded(f"{k}^{n} lattice samples exceed the budget of {max_points}")
    t = np.linspace(-box_half_width, box_half_width, k)
    rest = (np.stack(np.meshgrid(*(t,) * (n - 1), indexing="ij"), -1).reshape(-1, n - 1)
            if n > 1 else np.zeros((1, 0)))
    best_val, best_pt = -math.inf, None
    for x0 in t:
        slab = np.column_stack([np.full(rest.shape[0], x0), rest])
        vals = s.evaluate(slab) @ a
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_pt = float(vals[j]), slab[j].copy()
    return best_pt, best_val
