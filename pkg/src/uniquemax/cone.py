"""Polyhedral cones {a : H a >= 0}: extreme rays and strictly positive functionals.

The rows of H are samples of basis functions at grid points, so the cone is
the set of coefficient vectors whose element is nonnegative on the grid.
"""
import numpy as np
from scipy.linalg import qr
from scipy.optimize import linprog

from .errors import SeparationError

RAY_TOL = 1e-10
MAX_RAYS = 2_000
MAX_ITERATIONS = 10_000


def constraint_rows(B, tol=1e-14):
    """Normalized, de-duplicated rows of B; rows that vanish constrain nothing."""
    B = np.asarray(B, dtype=float)
    r = np.linalg.norm(B, axis=1)
    keep = r > tol * max(float(r.max(initial=0.0)), 1.0)
    H = B[keep] / r[keep, None]
    _, first = np.unique(np.round(H, 12), axis=0, return_index=True)
    return H[np.sort(first)]


def extreme_rays(H, tol=RAY_TOL, max_rays=MAX_RAYS):
    """Extreme rays of the pointed cone {a : H a >= 0} by the double description method.

    Constraints are added one at a time (most violated first) starting from a
    simplicial cone on m independent rows; constraints already satisfied by
    every current ray are redundant and never added.  Adjacency is decided
    combinatorially from the sets of tight constraints.  Returns unit rays as
    rows of a (k, m) array, empty when the cone is {0}.
    """
    H = np.asarray(H, dtype=float)
    k, m = H.shape
    if k < m:
        raise SeparationError("sampled cone is not pointed (rows do not span); raise the resolution")
    _, _, piv = qr(H.T, pivoting=True, mode="economic")
    HI = H[piv[:m]]
    if abs(np.linalg.det(HI)) < 1e-12:
        raise SeparationError("sampled cone is not pointed (rows do not span); raise the resolution")
    R = np.linalg.inv(HI).T
    R /= np.linalg.norm(R, axis=1)[:, None]
    # Z[r, c]: ray r is tight on the c-th added constraint
    Z = ~np.eye(m, dtype=bool)
    for _ in range(MAX_ITERATIONS):
        if R.shape[0] == 0:
            return R
        S = H @ R.T
        worst = S.min(axis=1)
        i = int(np.argmin(worst))
        if worst[i] >= -tol:
            return R
        s = S[i]
        pos = np.flatnonzero(s > tol)
        neg = np.flatnonzero(s < -tol)
        zer = np.flatnonzero(np.abs(s) <= tol)
        notZ = (~Z).astype(np.float32)
        new_R = [R[pos], R[zer]]
        new_Z = [np.column_stack([Z[pos], np.zeros(pos.size, bool)]),
                 np.column_stack([Z[zer], np.ones(zer.size, bool)])]
        for p in pos:
            common = Z[p] & Z[neg]
            ok = common.sum(axis=1) >= m - 2
            if not ok.any():
                continue
            q = neg[ok]
            common = common[ok]
            # rays whose tight set contains `common`; p and q always do
            covers = (common.astype(np.float32) @ notZ.T) == 0
            q = q[covers.sum(axis=1) == 2]
            if q.size == 0:
                continue
            r = s[p] * R[q] - s[q, None] * R[p]
            nr = np.linalg.norm(r, axis=1)
            good = nr > 0.0
            new_R.append(r[good] / nr[good, None])
            new_Z.append(np.column_stack([Z[p] & Z[q[good]], np.ones(int(good.sum()), bool)]))
        R = np.vstack(new_R)
        Z = np.vstack(new_Z)
        if R.shape[0] > max_rays:
            raise SeparationError(f"double description exceeded {max_rays} rays")
    raise SeparationError("double description did not converge")


def max_min_functional(rays):
    """Solve max t s.t. phi . r >= t for every ray, ||phi||_inf <= 1.

    Returns (phi, t); t > 0 means phi is strictly positive on the cone.
    """
    rays = np.asarray(rays, dtype=float)
    k, m = rays.shape
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A = np.hstack([-rays, np.ones((k, 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(k), bounds=[(-1.0, 1.0)] * m + [(None, 1.0)],
                  method="highs")
    if res.status != 0:
        raise SeparationError(f"separation LP failed: {res.message}")
    return res.x[:m], float(res.x[-1])


def min_on_cone(phi, H):
    """Minimum of phi . a over {H a >= 0, w . a = 1} with w = sum of the rows of H.

    w is strictly positive on the nonzero cone members when H has full column
    rank, so the slice is bounded; a positive optimum certifies that phi is
    strictly positive on the cone minus the origin.  Returns +inf for an empty
    slice (the cone is {0}).
    """
    H = np.asarray(H, dtype=float)
    m = H.shape[1]
    w = H.sum(axis=0)
    res = linprog(phi, A_ub=-H, b_ub=np.zeros(H.shape[0]), A_eq=w[None, :], b_eq=[1.0],
                  bounds=[(None, None)] * m, method="highs")
    if res.status == 2:
        return np.inf
    if res.status != 0:
        raise SeparationError(f"cone check LP failed: {res.message}")
    return float(res.fun)


def dual_functional(H):
    """Solve max t s.t. phi = t w + H^T lam, lam >= 0, ||phi||_inf <= 1, w = sum of rows.

    By duality t is the minimum of phi over the slice {H a >= 0, w . a = 1},
    so this finds a well-centred interior point of the dual cone without
    enumerating extreme rays.  Returns (phi, t).
    """
    H = np.asarray(H, dtype=float)
    k, m = H.shape
    w = H.sum(axis=0)
    c = np.zeros(m + 1 + k)
    c[m] = -1.0
    A_eq = np.hstack([np.eye(m), -w[:, None], -H.T])
    bounds = [(-1.0, 1.0)] * m + [(None, None)] + [(0.0, None)] * k
    res = linprog(c, A_eq=A_eq, b_eq=np.zeros(m), bounds=bounds, method="highs")
    if res.status != 0:
        raise SeparationError(f"dual separation LP failed: {res.message}")
    return res.x[:m], float(res.x[m])
