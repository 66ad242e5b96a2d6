"""Enumeration oracles for tiny instances.

These deliberately avoid the package's own simplex: continuous restrictions
are solved with scipy's HiGHS (or closed form when every continuous column is
a single-entry slack), so they stay an independent check on the B&B solver.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from .errors import EnumerationTooLarge, Infeasible
from .model import MipInstance, Point

MAX_LATTICE_POINTS = 10**6
DEFAULT_CAP = 10


def enumeration_box(instance: MipInstance, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Per-variable integer upper bounds for enumeration.

    Uses recorded upper bounds, then any row whose standard-form coefficients
    are all nonnegative (which bounds every variable it contains), else ``cap``.
    """
    box = np.where(np.isfinite(instance.int_upper), np.floor(instance.int_upper + 1e-9), np.inf)
    full = instance.matrix
    for j in range(instance.m):
        row = full[j]
        if instance.b[j] < 0 or np.any(row < 0):
            continue
        a = instance.A[j]
        pos = a > 0
        box[pos] = np.minimum(box[pos], np.floor(instance.b[j] / a[pos] + 1e-9))
    box = np.where(np.isfinite(box), box, cap)
    return box.astype(int)


def _lattice(box: np.ndarray, max_points: int) -> np.ndarray:
    box = np.asarray(box, dtype=int)
    count = math.prod(int(u) + 1 for u in box) if len(box) else 1
    if count > max_points:
        raise EnumerationTooLarge(f"box has {count} lattice points (cap {max_points})")
    if len(box) == 0:
        return np.zeros((1, 0))
    grids = np.meshgrid(*[np.arange(u + 1) for u in box], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1).astype(float)


def _slack_structure(C: np.ndarray) -> dict[int, tuple[int, float]] | None:
    """Map row -> (column, coefficient) when every column has one nonzero in a distinct row."""
    mapping: dict[int, tuple[int, float]] = {}
    for k in range(C.shape[1]):
        nz = np.flatnonzero(C[:, k])
        if len(nz) != 1 or int(nz[0]) in mapping:
            return None
        mapping[int(nz[0])] = (k, float(C[nz[0], k]))
    return mapping


def _tol(r: np.ndarray) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(r), initial=0.0)))


def _completions_closed_form(instance: MipInstance, X: np.ndarray, mapping) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized unique completion for slack-only continuous parts.

    Returns a feasibility mask over the rows of ``X`` and the ``V`` matrix.
    """
    R = instance.b[None, :] - X @ instance.A.T
    V = np.zeros((X.shape[0], instance.p))
    ok = np.ones(X.shape[0], bool)
    tol = 1e-9 * np.maximum(1.0, np.abs(R).max(axis=1, initial=0.0))
    for j in range(instance.m):
        if j in mapping:
            k, coef = mapping[j]
            val = R[:, j] / coef
            ok &= val >= -tol
            V[:, k] = np.maximum(val, 0.0)
        else:
            ok &= np.abs(R[:, j]) <= tol
    return ok, V


def _continuous_lp(instance: MipInstance, r: np.ndarray):
    if instance.p == 0:
        return (0.0, np.zeros(0)) if np.all(np.abs(r) <= _tol(r)) else None
    res = linprog(instance.g, A_eq=instance.C, b_eq=r, bounds=(0, None), method="highs")
    if res.status == 0:
        return float(res.fun), np.maximum(res.x, 0.0)
    if res.status == 3:
        return -math.inf, None
    return None


def brute_force_optimum(
    instance: MipInstance, box: np.ndarray | None = None, max_points: int = MAX_LATTICE_POINTS
) -> tuple[float, Point]:
    """Exact mixed-integer optimum by enumerating every integer point in ``box``."""
    box = enumeration_box(instance) if box is None else np.asarray(box, dtype=int)
    X = _lattice(box, max_points)
    mapping = _slack_structure(instance.C)
    if mapping is not None:
        ok, V = _completions_closed_form(instance, X, mapping)
        if not ok.any():
            raise Infeasible("no lattice point in the box extends to a feasible point")
        vals = X @ instance.f + V @ instance.g
        vals = np.where(ok, vals, np.inf)
        i = int(np.argmin(vals))
        return float(vals[i]), Point(X[i], V[i])
    best = math.inf
    best_point = None
    for x in X:
        out = _continuous_lp(instance, instance.b - instance.A @ x)
        if out is None:
            continue
        val, v = out
        if v is None:
            raise Infeasible("continuous restriction is unbounded; no finite optimum")
        total = float(instance.f @ x) + val
        if total < best - 1e-12:
            best, best_point = total, Point(x, v)
    if best_point is None:
        raise Infeasible("no lattice point in the box extends to a feasible point")
    return best, best_point


def _vertex_completions(C: np.ndarray, r: np.ndarray) -> list[np.ndarray]:
    m, p = C.shape
    tol = _tol(r)
    if p == 0:
        return [np.zeros(0)] if np.all(np.abs(r) <= tol) else []
    rank = np.linalg.matrix_rank(C) if m else 0
    if rank == 0:
        return [np.zeros(p)] if np.all(np.abs(r) <= tol) else []
    out: list[np.ndarray] = []
    seen: set[bytes] = set()
    for cols in itertools.combinations(range(p), rank):
        sub = C[:, cols]
        if np.linalg.matrix_rank(sub) < rank:
            continue
        sol, *_ = np.linalg.lstsq(sub, r, rcond=None)
        if np.any(sol < -tol) or np.max(np.abs(sub @ sol - r), initial=0.0) > 1e-8 * max(1.0, np.abs(r).max(initial=0)):
            continue
        v = np.zeros(p)
        v[list(cols)] = np.maximum(sol, 0.0)
        key = np.round(v, 9).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(v)
    return out


def enumerate_feasible_points(
    instance: MipInstance, box: np.ndarray | None = None, max_points: int = MAX_LATTICE_POINTS
) -> list[Point]:
    """Every feasible integer part in ``box`` with each vertex completion of its continuous part."""
    box = enumeration_box(instance) if box is None else np.asarray(box, dtype=int)
    X = _lattice(box, max_points)
    mapping = _slack_structure(instance.C)
    if mapping is not None:
        ok, V = _completions_closed_form(instance, X, mapping)
        return [Point(X[i], V[i]) for i in np.flatnonzero(ok)]
    points = []
    for x in X:
        for v in _vertex_completions(instance.C, instance.b - instance.A @ x):
            points.append(Point(x, v))
    return points
