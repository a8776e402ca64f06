"""Deterministic two-chart sampling of R^n.

The inner chart is a regular lattice on [-1, 1]^n cut down to the closed unit
ball.  The outer chart is the image of the same lattice under inversion, so
the far field is covered with the same number of samples as the ball and the
two charts meet on the unit sphere.
"""
import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BudgetExceeded, PreconditionError
from .geometry import invert

MAX_LATTICE_POINTS = 50_000_000
SPHERE_TOL = 1e-12


def axis_nodes(resolution):
    """Symmetric lattice nodes on [-1, 1] with an exact 0 for odd resolutions."""
    t = np.linspace(-1.0, 1.0, resolution)
    t = 0.5 * (t - t[::-1])
    if resolution % 2:
        t[resolution // 2] = 0.0
    return t


def _ball_lattice(n, resolution):
    t = axis_nodes(resolution)
    if n == 1:
        return t[:, None]
    rest = np.stack(np.meshgrid(*(t,) * (n - 1), indexing="ij"), -1).reshape(-1, n - 1)
    rest_sq = np.einsum("ij,ij->i", rest, rest)
    slabs = []
    for x0 in t:
        keep = rest_sq + x0 * x0 <= 1.0 + SPHERE_TOL
        slab = np.empty((int(keep.sum()), n))
        slab[:, 0] = x0
        slab[:, 1:] = rest[keep]
        slabs.append(slab)
    return np.concatenate(slabs)


@dataclass(frozen=True, eq=False)
class TwoChartGrid:
    """Lattice samples of the unit ball and of its inversion image.

    ``points`` is ordered as [strict interior, unit sphere, strict exterior];
    ``inner_points`` and ``outer_points`` are views that share the sphere rows.
    """

    n: int
    resolution: int
    points: np.ndarray
    n_interior: int
    n_sphere: int

    @property
    def inner_points(self):
        return self.points[: self.n_interior + self.n_sphere]

    @property
    def outer_points(self):
        return self.points[self.n_interior:]

    @property
    def spacing(self):
        return 2.0 / (self.resolution - 1)

    @property
    def cell_diameter(self):
        return self.spacing * math.sqrt(self.n)

    def cell_diameter_at(self, x):
        """Diameter of the lattice cell around x; outer-chart cells grow like ||x||^2."""
        return self.cell_diameter * max(1.0, float(np.dot(x, x)))

    @cached_property
    def radii(self):
        return np.sqrt(np.einsum("ij,ij->i", self.points, self.points))

    def __len__(self):
        return self.points.shape[0]

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{i + 1}" for i in range(self.n)])
        for row in self.points:
            w.writerow([repr(float(v)) for v in row])


def build_grid(n, resolution, max_lattice_points=MAX_LATTICE_POINTS):
    """Build the two-chart grid for R^n with ``resolution`` nodes per axis."""
    if n < 1:
        raise PreconditionError("ambient dimension must be positive")
    if resolution < 3:
        raise PreconditionError(f"resolution must be >= 3, got {resolution}")
    if n * math.log(resolution) > math.log(max_lattice_points):
        best = int(math.floor(max_lattice_points ** (1.0 / n)))
        raise BudgetExceeded(
            f"resolution {resolution} in dimension {n} needs {resolution}^{n} lattice points, "
            f"over the budget of {max_lattice_points}; use resolution <= {best}")
    ball = _ball_lattice(n, resolution)
    if resolution % 2 == 0:
        # even lattices miss the origin and the axis poles
        eye = np.eye(n)
        ball = np.concatenate([ball, np.zeros((1, n)), eye, -eye])
    sq = np.einsum("ij,ij->i", ball, ball)
    on_sphere = np.abs(sq - 1.0) <= SPHERE_TOL
    interior = ball[~on_sphere]
    sphere = ball[on_sphere]
    inside_nonzero = interior[np.einsum("ij,ij->i", interior, interior) > 0.0]
    exterior = invert(inside_nonzero)
    points = np.concatenate([interior, sphere, exterior])
    points.setflags(write=False)
    return TwoChartGrid(n, resolution, points, interior.shape[0], sphere.shape[0])
