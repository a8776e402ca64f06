"""Domain types: points, coefficient vectors, basis functions and subspaces.

Points and coefficient vectors are plain 1-D float arrays; :func:`as_point`
and :func:`as_coefs` validate them.  Basis functions are immutable callables
on batches of points of shape ``(k, n)`` that also expose a decay envelope
``E(R) >= sup_{||x|| >= R} |f(x)|``.
"""
import json
import math
import os
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DimensionMismatch, PreconditionError, RankDeficient
from .geometry import inversion_extension, norms

CHUNK_ROWS = 1 << 17
GRAM_THRESHOLD = 1e-8


def as_point(x, dim=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise PreconditionError(f"a point must be a non-empty 1-D vector, got shape {x.shape}")
    if dim is not None and x.size != dim:
        raise DimensionMismatch(dim, x.size)
    if not np.all(np.isfinite(x)):
        raise PreconditionError("point coordinates must be finite")
    return x


def as_coefs(a, dim=None):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise PreconditionError(f"coefficients must be a non-empty 1-D vector, got shape {a.shape}")
    if dim is not None and a.size != dim:
        raise DimensionMismatch(dim, a.size, what="coefficient")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("coefficients must be finite")
    return a


def is_zero(a):
    return float(np.max(np.abs(a))) == 0.0


def thread_count():
    """Worker cap from UNIQUEMAX_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("UNIQUEMAX_THREADS", "1")))
    except ValueError:
        return 1


def chunked_rows(fn, X, out_cols=None):
    """Apply ``fn`` to row chunks of X and stitch the results in order."""
    k = X.shape[0]
    bounds = [(i, min(i + CHUNK_ROWS, k)) for i in range(0, k, CHUNK_ROWS)] or [(0, 0)]
    shape = (k,) if out_cols is None else (k, out_cols)
    out = np.empty(shape)

    def work(b):
        out[b[0]:b[1]] = fn(X[b[0]:b[1]])

    workers = thread_count()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, bounds))
    else:
        for b in bounds:
            work(b)
    return out


class BasisFunction:
    """Evaluable element of C_0(R^n) with a decay envelope.

    Subclasses implement ``_eval`` on a validated ``(k, n)`` batch,
    ``envelope(R)``, ``lipschitz()`` and ``to_dict()``.
    """

    family = "abstract"
    ambient_dim: int

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = X[None, :] if single else X
        if X2.ndim != 2 or X2.shape[1] != self.ambient_dim:
            raise DimensionMismatch(self.ambient_dim, X2.shape[-1] if X2.ndim else 0)
        vals = self._eval(X2)
        return float(vals[0]) if single else vals

    def _eval(self, X):
        raise NotImplementedError

    def envelope(self, R):
        raise NotImplementedError

    def lipschitz(self):
        return math.inf

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ProjectionInversion(BasisFunction):
    """x -> pi_axis(G(x)), the axis-th coordinate of the inversion extension."""

    axis: int
    ambient_dim: int
    family = "projection_inversion"

    def __post_init__(self):
        if not 0 <= self.axis < self.ambient_dim:
            raise PreconditionError(f"axis {self.axis} out of range for dimension {self.ambient_dim}")

    def _eval(self, X):
        return inversion_extension(X)[:, self.axis]

    def envelope(self, R):
        return 1.0 if R <= 1.0 else 1.0 / R

    def lipschitz(self):
        # G is 1-Lipschitz: its derivative outside B_1 has norm 1/||x||^2
        return 1.0

    def to_dict(self):
        return {"family": self.family, "axis": self.axis}


@dataclass(frozen=True, eq=False)
class GaussianBump(BasisFunction):
    """sign * exp(-||x - center||^2 / width^2); unit sup-norm by construction."""

    center: tuple
    width: float
    sign: int = 1
    family = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.width > 0:
            raise PreconditionError("gaussian width must be positive")
        if self.sign not in (1, -1):
            raise PreconditionError("gaussian sign must be +1 or -1")

    @property
    def ambient_dim(self):
        return len(self.center)

    def _eval(self, X):
        D = X - np.asarray(self.center)
        return self.sign * np.exp(-np.einsum("ij,ij->i", D, D) / self.width ** 2)

    def envelope(self, R):
        gap = max(0.0, R - math.sqrt(sum(c * c for c in self.center)))
        return math.exp(-(gap / self.width) ** 2)

    def lipschitz(self):
        return math.sqrt(2.0 / math.e) / self.width

    def to_dict(self):
        return {"family": self.family, "center": list(self.center), "width": self.width,
                "sign": self.sign}


@dataclass(frozen=True, eq=False)
class SampleTable(BasisFunction):
    """Multilinear interpolant of node values on the box [lo, hi]^n, zero outside.

    Values are divided by their largest magnitude, so the sup-norm is 1.
    """

    lo: float
    hi: float
    values: np.ndarray
    family = "sample_table"
    _interp: object = field(init=False, repr=False)
    _env_radii: np.ndarray = field(init=False, repr=False)
    _env_max: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim < 1 or min(v.shape) < 2 or len(set(v.shape)) != 1:
            raise PreconditionError("sample table must be a cube of at least 2 nodes per axis")
        if not self.hi > self.lo:
            raise PreconditionError("sample table box must have hi > lo")
        peak = np.max(np.abs(v))
        if peak == 0 or not np.isfinite(peak):
            raise PreconditionError("sample table must have a finite nonzero entry")
        v = v / peak
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        axis = np.linspace(self.lo, self.hi, v.shape[0])
        object.__setattr__(self, "_interp", RegularGridInterpolator(
            (axis,) * v.ndim, v, method="linear", bounds_error=False, fill_value=0.0))
        nodes = np.stack(np.meshgrid(*(axis,) * v.ndim, indexing="ij"), -1).reshape(-1, v.ndim)
        r = norms(nodes)
        order = np.argsort(r)
        suffix = np.maximum.accumulate(np.abs(v.ravel()[order])[::-1])[::-1]
        object.__setattr__(self, "_env_radii", r[order])
        object.__setattr__(self, "_env_max", suffix)

    @property
    def ambient_dim(self):
        return self.values.ndim

    @property
    def spacing(self):
        return (self.hi - self.lo) / (self.values.shape[0] - 1)

    def _eval(self, X):
        return self._interp(X)

    def envelope(self, R):
        # an interpolated value is a convex combination of its cell's corners,
        # all of which lie within one cell diagonal of x
        cut = R - self.spacing * math.sqrt(self.ambient_dim)
        i = np.searchsorted(self._env_radii, cut, side="left")
        return float(self._env_max[i]) if i < self._env_max.size else 0.0

    def lipschitz(self):
        v = self.values
        edges = [np.take(v, [0, -1], axis=k) for k in range(v.ndim)]
        if any(np.max(np.abs(e)) > 0 for e in edges):
            return math.inf
        steep = max(float(np.max(np.abs(np.diff(v, axis=k)))) for k in range(v.ndim))
        return steep / self.spacing * math.sqrt(v.ndim)

    def to_dict(self):
        return {"family": self.family, "lo": self.lo, "hi": self.hi,
                "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class Restricted(BasisFunction):
    """The restriction of ``base`` to the closed ball of the given radius (zero outside)."""

    base: BasisFunction
    radius: float
    family = "restricted"

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("restriction radius must be positive")

    @property
    def ambient_dim(self):
        return self.base.ambient_dim

    def _eval(self, X):
        out = self.base._eval(X)
        return np.where(norms(X) <= self.radius, out, 0.0)

    def envelope(self, R):
        return self.base.envelope(R) if R <= self.radius else 0.0

    def to_dict(self):
        return {"family": self.family, "radius": self.radius, "base": self.base.to_dict()}


@dataclass(frozen=True, eq=False)
class LinearCombination(BasisFunction):
    """scale * sum_j coefs[j] * terms[j]."""

    terms: tuple
    coefs: np.ndarray
    scale: float = 1.0
    family = "combination"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        c = as_coefs(self.coefs, len(self.terms))
        c.setflags(write=False)
        object.__setattr__(self, "coefs", c)
        dims = {t.ambient_dim for t in self.terms}
        if len(dims) != 1:
            raise PreconditionError(f"combination terms disagree on ambient dimension: {sorted(dims)}")

    @property
    def ambient_dim(self):
        return self.terms[0].ambient_dim

    @property
    def effective_coefs(self):
        return self.scale * self.coefs

    def _eval(self, X):
        out = np.zeros(X.shape[0])
        for c, t in zip(self.effective_coefs, self.terms):
            if c != 0.0:
                out += c * t._eval(X)
        return out

    def envelope(self, R):
        return float(sum(abs(c) * t.envelope(R) for c, t in zip(self.effective_coefs, self.terms)))

    def lipschitz(self):
        return float(sum(abs(c) * t.lipschitz() for c, t in zip(self.effective_coefs, self.terms)
                         if c != 0.0))

    def to_dict(self):
        return {"family": self.family, "coefs": self.coefs.tolist(), "scale": self.scale,
                "terms": [t.to_dict() for t in self.terms]}


def basis_from_dict(d, ambient_dim=None):
    fam = d.get("family")
    if fam == "projection_inversion":
        if ambient_dim is None:
            raise PreconditionError("projection_inversion needs the subspace ambient_dim")
        return ProjectionInversion(int(d["axis"]), int(ambient_dim))
    if fam == "gaussian":
        return GaussianBump(tuple(d["center"]), float(d["width"]), int(d.get("sign", 1)))
    if fam == "sample_table":
        return SampleTable(float(d["lo"]), float(d["hi"]), np.asarray(d["values"], dtype=float))
    if fam == "restricted":
        return Restricted(basis_from_dict(d["base"], ambient_dim), float(d["radius"]))
    if fam == "combination":
        terms = [basis_from_dict(t, ambient_dim) for t in d["terms"]]
        return LinearCombination(terms, np.asarray(d["coefs"], dtype=float), float(d.get("scale", 1.0)))
    raise PreconditionError(f"unknown basis family {fam!r}")


@dataclass(frozen=True, eq=False)
class Subspace:
    """An ordered basis of functions on a common R^n; elements are coefficient vectors."""

    basis: tuple
    ambient_dim: int
    _samples: object = field(init=False, repr=False, default=None)
    _root: object = field(init=False, repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if not self.basis:
            raise PreconditionError("a subspace needs at least one basis function")
        for f in self.basis:
            if f.ambient_dim != self.ambient_dim:
                raise DimensionMismatch(self.ambient_dim, f.ambient_dim, what="basis function")
        object.__setattr__(self, "_samples", weakref.WeakKeyDictionary())
        f0 = self.basis[0]
        if isinstance(f0, LinearCombination) and all(
                isinstance(f, LinearCombination) and f.terms == f0.terms for f in self.basis):
            # combinations of one shared basis: evaluate the shared terms once
            C = np.array([f.effective_coefs for f in self.basis])
            object.__setattr__(self, "_root", (f0.terms, C))

    @property
    def dim(self):
        return len(self.basis)

    def evaluate(self, X):
        """Basis values at the rows of X as a (k, m) matrix."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.ambient_dim:
            raise DimensionMismatch(self.ambient_dim, X.shape[-1])
        if X.shape[0] <= 64:
            return self._block(X)
        return chunked_rows(self._block, X, out_cols=self.dim)

    def _block(self, X):
        if self._root is None:
            return np.column_stack([f._eval(X) for f in self.basis])
        terms, C = self._root
        return np.column_stack([t._eval(X) for t in terms]) @ C.T

    def sample(self, grid):
        """Basis values on every grid point, cached per grid."""
        if grid.n != self.ambient_dim:
            raise DimensionMismatch(self.ambient_dim, grid.n, what="grid")
        B = self._samples.get(grid)
        if B is None:
            # column-major makes the grid matvec about twice as fast
            B = np.asfortranarray(self.evaluate(grid.points))
            B.setflags(write=False)
            self._samples[grid] = B
        return B

    def combine(self, a):
        return LinearCombination(self.basis, as_coefs(a, self.dim))

    def gram_singular_values(self, grid):
        B = self.sample(grid)
        cn = norms(B.T)
        if np.any(cn == 0):
            return np.zeros(self.dim)
        Bn = B / cn
        return np.linalg.svd(Bn.T @ Bn, compute_uv=False)

    def check_rank(self, grid, threshold=GRAM_THRESHOLD):
        sv = self.gram_singular_values(grid)
        if sv[-1] <= threshold:
            raise RankDeficient(
                f"sampled Gram matrix is rank deficient (smallest singular value {sv[-1]:.3e} "
                f"<= {threshold:g}); raise the resolution or check the basis", sv)
        return sv

    def to_dict(self):
        return {"ambient_dim": self.ambient_dim, "basis": [f.to_dict() for f in self.basis]}

    @classmethod
    def from_dict(cls, d):
        try:
            n = int(d["ambient_dim"])
            basis = [basis_from_dict(b, n) for b in d["basis"]]
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"invalid subspace spec: {exc}") from exc
        return cls(tuple(basis), n)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
