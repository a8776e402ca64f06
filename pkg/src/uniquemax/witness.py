"""The explicit n-dimensional subspace span{pi_i o G} and its closed-form maxima.

Every nonzero element x -> <a, G(x)> attains its maximum ||a|| at the single
point a/||a|| of the unit sphere, and decays like ||a||/||x|| outside the ball.
"""
from dataclasses import dataclass

import numpy as np

from .core import ProjectionInversion, Subspace, as_coefs, as_point, is_zero
from .errors import PreconditionError, ZeroElementError
from .geometry import inversion_extension

MAX_DIM = 8

__all__ = ["MAX_DIM", "AnalyticMaxResult", "analytic_max", "interior_strictness_check",
           "inversion_extension", "witness_basis"]


@dataclass(frozen=True)
class AnalyticMaxResult:
    argmax: np.ndarray
    value: float
    coef_norm: float

    def to_dict(self):
        return {"argmax": self.argmax.tolist(), "value": self.value, "coef_norm": self.coef_norm}


def witness_basis(n, max_dim=MAX_DIM):
    """Basis pi_1 o G, ..., pi_n o G of the witness subspace in R^n."""
    if not 1 <= n <= max_dim:
        raise PreconditionError(f"witness dimension must lie in [1, {max_dim}], got {n}")
    return Subspace(tuple(ProjectionInversion(i, n) for i in range(n)), n)


def analytic_max(a):
    """Unique maximizer a/||a|| and maximum ||a|| of sum_i a_i (pi_i o G)."""
    a = as_coefs(a)
    if is_zero(a):
        raise ZeroElementError()
    r = float(np.linalg.norm(a))
    return AnalyticMaxResult(a / r, r, r)


def interior_strictness_check(a, y, strictness=0.0):
    """True iff <a, G(y)> < ||a|| - strictness for a point y off the unit sphere.

    With ``strictness = 0`` this is the exact strict inequality, which holds
    for every such y; the floor only coarsens what gets reported.
    """
    a = as_coefs(a)
    y = as_point(y, a.size)
    if is_zero(a):
        raise ZeroElementError("the zero element has no maximum to compare against")
    if abs(float(np.linalg.norm(y)) - 1.0) <= 4 * np.finfo(float).eps:
        raise PreconditionError("interior strictness needs ||y|| != 1; y lies on the unit sphere")
    return bool(a @ inversion_extension(y) < np.linalg.norm(a) - strictness)
