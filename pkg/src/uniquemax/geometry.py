"""Sphere inversion and the inversion extension G on R^n.

All functions accept a single point of shape (n,) or a batch of shape (k, n)
and return arrays of the same shape.
"""
import numpy as np


def norms(X):
    X = np.asarray(X, dtype=float)
    return np.sqrt(np.einsum("...i,...i->...", X, X))


def invert(X):
    """Inversion in the unit sphere, x -> x / ||x||^2 (undefined at 0)."""
    X = np.asarray(X, dtype=float)
    sq = np.einsum("...i,...i->...", X, X)
    return X / sq[..., None]


def inversion_extension(X):
    """G(x) = x on the closed unit ball and x / ||x||^2 outside it.

    Continuous, with ||G(x)|| = min(||x||, 1/||x||), so G maps R^n onto the
    closed unit ball and tends to 0 at infinity.
    """
    X = np.asarray(X, dtype=float)
    sq = np.einsum("...i,...i->...", X, X)
    # branch at exactly ||x|| = 1; both branches agree there
    scale = np.where(sq > 1.0, 1.0 / np.where(sq > 1.0, sq, 1.0), 1.0)
    return X * scale[..., None]


def to_chart(x):
    """Return (chart, u) with chart 0 for ||x|| <= 1 (u = x) and 1 otherwise (u = x/||x||^2)."""
    x = np.asarray(x, dtype=float)
    if x @ x <= 1.0:
        return 0, x.copy()
    return 1, invert(x)


def from_chart(chart, u):
    """Inverse of :func:`to_chart`; returns None for the outer-chart origin (the point at infinity)."""
    u = np.asarray(u, dtype=float)
    if chart == 0:
        return u.copy()
    sq = u @ u
    if sq == 0.0:
        return None
    return u / sq


def random_directions(rng, k, n):
    """k points drawn uniformly from the unit sphere S^{n-1}."""
    Z = rng.standard_normal((k, n))
    Z /= norms(Z)[:, None]
    return Z
