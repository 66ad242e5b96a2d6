"""Dense bounded revised simplex.

Solves ``min c.x  s.t.  A x = b,  lb <= x <= ub`` where every ``lb`` is
finite (``ub`` may be ``inf``).  Phase 1 starts from an artificial basis;
pricing is Dantzig with a switch to Bland's rule after a run of degenerate
pivots, so results are deterministic and cycling-free.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ShapeError, SolverError


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProblem:
    """Solver-native problem: equality rows plus column bounds and integrality."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    integer: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        nvars = self.c.shape[0]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.A = np.asarray(self.A, dtype=float).reshape(self.b.shape[0], nvars)
        self.lb = np.zeros(nvars) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        self.ub = np.full(nvars, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        self.integer = np.zeros(nvars, bool) if self.integer is None else np.asarray(self.integer, bool)
        for arr in (self.lb, self.ub, self.integer):
            if arr.shape != (nvars,):
                raise ShapeError("bounds and integrality must have one entry per column")
        if not np.all(np.isfinite(self.lb)):
            raise ShapeError("every lower bound must be finite")

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class WarmStart:
    """Basis of a finished solve: artificial signs, basic columns, nonbasic-at-upper flags."""

    signs: np.ndarray
    basis: np.ndarray
    at_upper: np.ndarray


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = float("nan")
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis_id: str = ""
    iterations: int = 0
    warm: WarmStart | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Working state of one simplex run (structural + artificial columns)."""

    def __init__(self, A, b, lb, ub, pivot_tol, refactor_every):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.m, self.ncols = A.shape
        self.pivot_tol = pivot_tol
        self.refactor_every = refactor_every
        self.x = np.empty(self.ncols)
        self.basis = np.empty(self.m, dtype=int)
        self.is_basic = np.zeros(self.ncols, bool)
        self.Binv = np.eye(self.m)
        self.iterations = 0

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis") from exc
        nb = ~self.is_basic
        self.x[self.basis] = self.Binv @ (self.b - self.A[:, nb] @ self.x[nb])

    def run_dual(self, cost, max_iter, feas_tol):
        """Bounded dual simplex from a dual-feasible basis; returns False if primal infeasible."""
        fixed = self.ub - self.lb <= 0.0
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"dual simplex iteration limit ({max_iter}) reached")
            xb = self.x[self.basis]
            lbb = self.lb[self.basis]
            ubb = self.ub[self.basis]
            below = lbb - xb
            above = xb - ubb
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= feas_tol * max(1.0, abs(xb[r])):
                return True
            low = below[r] > above[r]
            target = lbb[r] if low else ubb[r]
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            alpha_r = self.Binv[r] @ self.A
            at_ub = (~self.is_basic) & (self.x >= self.ub) & np.isfinite(self.ub)
            nb = (~self.is_basic) & (~fixed)
            if low:
                cand = nb & (((~at_ub) & (alpha_r < -self.pivot_tol)) | (at_ub & (alpha_r > self.pivot_tol)))
            else:
                cand = nb & (((~at_ub) & (alpha_r > self.pivot_tol)) | (at_ub & (alpha_r < -self.pivot_tol)))
            if not cand.any():
                return False
            ratio = np.where(cand, np.abs(d) / np.maximum(np.abs(alpha_r), 1e-300), np.inf)
            best = ratio.min()
            ties = np.flatnonzero(ratio <= best + 1e-12)
            j = int(ties[np.argmax(np.abs(alpha_r[ties]))])
            alpha = self.Binv @ self.A[:, j]
            t = (xb[r] - target) / alpha[r]
            leaving = int(self.basis[r])
            self.x[j] += t
            self.x[self.basis] = xb - t * alpha
            self.x[leaving] = target
            row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, row)
            self.Binv[r] = row
            self.basis[r] = j
            self.is_basic[j] = True
            self.is_basic[leaving] = False
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= self.refactor_every:
                self.refactor()
                since_refactor = 0

    def run(self, cost, max_iter, dual_tol, bland_after):
        m = self.m
        degenerate = 0
        fixed = self.ub - self.lb <= 0.0
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"simplex iteration limit ({max_iter}) reached")
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            at_ub = (~self.is_basic) & (self.x >= self.ub) & np.isfinite(self.ub)
            cand_inc = (~self.is_basic) & (~fixed) & (~at_ub) & (d < -dual_tol)
            cand_dec = (~self.is_basic) & (~fixed) & at_ub & (d > dual_tol)
            cand = cand_inc | cand_dec
            if not cand.any():
                return LpStatus.OPTIMAL, y, d
            if degenerate >= bland_after:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            s = 1.0 if cand_inc[j] else -1.0
            alpha = self.Binv @ self.A[:, j]
            dxb = -s * alpha
            xb = self.x[self.basis]
            lbb = self.lb[self.basis]
            ubb = self.ub[self.basis]
            ratios = np.full(m, np.inf)
            dec = dxb < -self.pivot_tol
            inc = dxb > self.pivot_tol
            ratios[dec] = np.maximum(xb[dec] - lbb[dec], 0.0) / -dxb[dec]
            finite_ub = inc & np.isfinite(ubb)
            ratios[finite_ub] = np.maximum(ubb[finite_ub] - xb[finite_ub], 0.0) / dxb[finite_ub]
            t_flip = self.ub[j] - self.lb[j]
            t_min = ratios.min() if m else np.inf
            if t_flip <= t_min:
                if not np.isfinite(t_flip):
                    return LpStatus.UNBOUNDED, y, d
                self.x[j] = self.ub[j] if s > 0 else self.lb[j]
                self.x[self.basis] = xb + t_flip * dxb
                step = t_flip
            else:
                if not np.isfinite(t_min):
                    return LpStatus.UNBOUNDED, y, d
                ties = np.flatnonzero(ratios <= t_min + 1e-12)
                if degenerate >= bland_after:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(dxb[ties]))])
                leaving = int(self.basis[r])
                self.x[j] = self.x[j] + s * t_min
                self.x[self.basis] = xb + t_min * dxb
                self.x[leaving] = self.lb[leaving] if dxb[r] < 0 else self.ub[leaving]
                piv = alpha[r]
                row = self.Binv[r] / piv
                self.Binv -= np.outer(alpha, row)
                self.Binv[r] = row
                self.basis[r] = j
                self.is_basic[j] = True
                self.is_basic[leaving] = False
                step = t_min
                since_refactor += 1
                if since_refactor >= self.refactor_every:
                    self.refactor()
                    since_refactor = 0
            degenerate = degenerate + 1 if step <= 1e-12 else 0
            self.iterations += 1


def _finish(problem: LinearProblem, tab: _Tableau, signs: np.ndarray, cost2: np.ndarray) -> LpSolution:
    A, lb, ub = problem.A, problem.lb, problem.ub
    n = A.shape[1]
    tab.refactor()
    y = cost2[tab.basis] @ tab.Binv
    d = problem.c - y @ A
    x = np.clip(tab.x[:n], lb, ub)
    full_ub = tab.ub
    at_upper = (~tab.is_basic) & (tab.x >= full_ub) & np.isfinite(full_ub)
    nb_upper = np.flatnonzero(at_upper[:n])
    key = np.sort(tab.basis).tobytes() + b"|" + nb_upper.tobytes()
    return LpSolution(
        LpStatus.OPTIMAL,
        x=x,
        objective=float(problem.c @ x),
        duals=y,
        reduced_costs=d,
        basis_id=hashlib.sha1(key).hexdigest()[:16],
        iterations=tab.iterations,
        warm=WarmStart(signs, tab.basis.copy(), at_upper),
    )


def _solve_warm(problem: LinearProblem, warm: WarmStart, feas_tol, dual_tol, pivot_tol, max_iter, bland_after):
    A, b, lb, ub = problem.A, problem.b, problem.lb, problem.ub
    m, n = A.shape
    signs = warm.signs
    Afull = np.hstack([A, np.diag(signs)]) if m else A.copy()
    lb_full = np.concatenate([lb, np.zeros(m)])
    ub_full = np.concatenate([ub, np.zeros(m)])
    tab = _Tableau(Afull, b, lb_full, ub_full, pivot_tol, refactor_every=64)
    tab.basis[:] = warm.basis
    tab.is_basic[warm.basis] = True
    up = warm.at_upper & np.isfinite(ub_full)
    tab.x[:] = np.where(up, ub_full, lb_full)
    tab.refactor()
    cost2 = np.concatenate([problem.c, np.zeros(m)])
    y = cost2[tab.basis] @ tab.Binv
    d = cost2 - y @ Afull
    nb = (~tab.is_basic) & (ub_full > lb_full)
    at_ub = nb & (tab.x >= ub_full)
    if np.any(nb & ~at_ub & (d < -dual_tol * 1e3)) or np.any(at_ub & (d > dual_tol * 1e3)):
        return None
    if not tab.run_dual(cost2, max_iter, feas_tol):
        return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
    status, _, _ = tab.run(cost2, max_iter, dual_tol, bland_after)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)
    return _finish(problem, tab, signs, cost2)


def solve_lp(
    problem: LinearProblem,
    *,
    feas_tol: float = 1e-9,
    dual_tol: float = 1e-9,
    pivot_tol: float = 1e-9,
    max_iter: int | None = None,
    bland_after: int = 50,
    warm: WarmStart | None = None,
) -> LpSolution:
    """Solve the LP relaxation of ``problem`` (integrality ignored).

    With ``warm`` (the basis of an earlier solve of the same rows and costs
    under different bounds) the dual simplex reoptimizes from that basis.
    """
    A, b, lb, ub = problem.A, problem.b, problem.lb, problem.ub
    m, n = A.shape
    if np.any(lb > ub):
        return LpSolution(LpStatus.INFEASIBLE)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    if warm is not None:
        try:
            sol = _solve_warm(problem, warm, feas_tol, dual_tol, pivot_tol, max_iter, bland_after)
        except SolverError:
            sol = None
        if sol is not None:
            return sol

    x0 = lb.copy()
    resid = b - A @ x0
    signs = np.where(resid >= 0, 1.0, -1.0)
    Afull = np.hstack([A, np.diag(signs)]) if m else A.copy()
    lb_full = np.concatenate([lb, np.zeros(m)])
    ub_full = np.concatenate([ub, np.full(m, np.inf)])
    tab = _Tableau(Afull, b, lb_full, ub_full, pivot_tol, refactor_every=64)
    tab.x[:n] = x0
    tab.x[n:] = np.abs(resid)
    tab.basis[:] = np.arange(n, n + m)
    tab.is_basic[n:] = True
    tab.Binv = np.diag(signs)

    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    if m and np.any(np.abs(resid) > 0):
        cost1 = np.concatenate([np.zeros(n), np.ones(m)])
        tab.run(cost1, max_iter, dual_tol, bland_after)
        tab.refactor()
        if tab.x[n:].sum() > feas_tol * scale * max(1, m):
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
    # artificials are pinned at zero for phase 2
    tab.ub[n:] = 0.0
    tab.x[n:] = np.where(tab.is_basic[n:], tab.x[n:], 0.0)
    cost2 = np.concatenate([problem.c, np.zeros(m)])
    status, _, _ = tab.run(cost2, max_iter, dual_tol, bland_after)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=tab.iterations)
    return _finish(problem, tab, signs, cost2)
