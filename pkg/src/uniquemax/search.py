"""Budgeted derivative-free pattern search.

A generalized pattern search: every iteration polls ``x +- h`` along the
directions of a local frame, then tries one model step built from the poll
values (the vertex of a separable quadratic fitted along each smooth
direction).  A successful iteration moves to the best point found; a failed
one contracts ``h``.  Frames let the caller search on a sphere or follow a
seam where the objective has a kink.
"""
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SearchResult:
    x: np.ndarray
    value: float
    evaluations: int
    step: float


@dataclass(frozen=True)
class Frame:
    """Poll directions at a base point.

    ``move(t)`` maps a coefficient vector over the frame directions to a trial
    point; ``smooth[j]`` says whether direction j may enter the model step.
    """

    size: int
    move: object
    smooth: tuple


def compass_frame(x):
    return Frame(x.size, lambda t: x + t, (True,) * x.size)


def tangent_basis(u):
    """Orthonormal basis (rows) of the tangent space of the unit sphere at u."""
    n = u.size
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    return Q[:, 1:n].T


def sphere_frame(x):
    """Tangent moves on the unit sphere, retracted by normalization."""
    u = x / math.sqrt(float(x @ x))
    T = tangent_basis(u)

    def move(t):
        y = u + t @ T
        return y / math.sqrt(float(y @ y))

    return Frame(T.shape[0], move, (True,) * T.shape[0])


def _model_offsets(f0, polls, h, smooth):
    t = np.zeros(len(polls))
    for j, (fp, fm) in enumerate(polls):
        if not smooth[j] or fp is None or fm is None:
            continue
        curv = fp + fm - 2.0 * f0
        if curv < 0.0:
            t[j] = min(2.0 * h, max(-2.0 * h, -(fp - fm) * h / (2.0 * curv)))
    return t


def pattern_search(fun, x0, step, budget=200, contraction=0.5, min_step=0.0,
                   frame=compass_frame, model=True, value0=None):
    """Maximize ``fun`` starting from ``x0`` with initial poll step ``step``.

    At most ``budget`` evaluations are spent (``value0``, when given, is the
    known value at ``x0`` and saves one).
    """
    x = np.array(x0, dtype=float)
    used = 0
    if value0 is None:
        fx = float(fun(x))
        used = 1
    else:
        fx = float(value0)
    h = float(step)
    while used < budget and h > min_step:
        fr = frame(x)
        best_x, best_f = None, fx
        polls = []
        for j in range(fr.size):
            pair = []
            for s in (h, -h):
                if used >= budget:
                    pair.append(None)
                    continue
                t = np.zeros(fr.size)
                t[j] = s
                y = fr.move(t)
                fy = float(fun(y))
                used += 1
                pair.append(fy)
                if fy > best_f:
                    best_x, best_f = y, fy
            polls.append(pair)
        if model and used < budget:
            t = _model_offsets(fx, polls, h, fr.smooth)
            if np.any(t):
                y = fr.move(t)
                fy = float(fun(y))
                used += 1
                if fy > best_f:
                    best_x, best_f = y, fy
        if best_x is None:
            h *= contraction
        else:
            moved = float(np.linalg.norm(best_x - x))
            x, fx = best_x, best_f
            h = max(min(h, 2.0 * moved), h * contraction)
    return SearchResult(x, fx, used, h)
