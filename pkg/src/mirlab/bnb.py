"""Best-bound branch-and-bound that records every improving incumbent."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .model import MipInstance, Point
from .simplex import LinearProblem, LpSolution, LpStatus, solve_lp


class MipStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    NODE_LIMIT = "NodeLimit"


@dataclass(frozen=True)
class SolverConfig:
    time_limit: float = 600.0
    feas_tol: float = 1e-9
    int_tol: float = 1e-6
    gap_tol: float = 1e-6
    node_limit: int | None = None
    seed: int = 0
    heuristic: bool = True

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ConfigError("time_limit must be positive")
        for name in ("feas_tol", "int_tol", "gap_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.node_limit is not None and self.node_limit < 1:
            raise ConfigError("node_limit must be >= 1")


@dataclass(frozen=True)
class Incumbent:
    x: np.ndarray
    objective: float
    node: int


@dataclass
class MipSolveResult:
    status: MipStatus
    x: np.ndarray | None
    objective: float
    pool: list[Incumbent] = field(default_factory=list)
    nodes: int = 0
    elapsed: float = 0.0
    bound: float = -math.inf

    @property
    def has_solution(self) -> bool:
        return bool(self.pool)


def instance_problem(instance: MipInstance) -> LinearProblem:
    integer = np.zeros(instance.n + instance.p, bool)
    integer[: instance.n] = True
    return LinearProblem(instance.cost, instance.matrix, instance.b, integer=integer)


def lp_relaxation(instance: MipInstance) -> LpSolution:
    return solve_lp(instance_problem(instance))


def _most_fractional(x: np.ndarray, integer: np.ndarray, tol: float) -> int | None:
    frac = np.abs(x - np.round(x))
    frac = np.where(integer, frac, 0.0)
    if frac.max(initial=0.0) <= tol:
        return None
    # distance to .5 ascending; argmin returns the lowest index on ties
    score = np.where(integer & (frac > tol), np.abs(x - np.floor(x) - 0.5), np.inf)
    return int(np.argmin(score))


def solve_mip(
    problem: LinearProblem | MipInstance,
    config: SolverConfig | None = None,
    fixings: Iterable[int] | None = None,
) -> MipSolveResult:
    """Minimize over the integer points of ``problem``.

    ``fixings`` lists columns held at 0 throughout the search.  Every
    incumbent that strictly improves the best objective is appended to
    ``pool``; on a time or node limit the pool found so far is returned.
    """
    config = config or SolverConfig()
    if isinstance(problem, MipInstance):
        problem = instance_problem(problem)
    start = time.perf_counter()
    lb = problem.lb.copy()
    ub = problem.ub.copy()
    if fixings is not None:
        fix = np.fromiter(fixings, dtype=int)
        if np.any(lb[fix] > 0) or np.any(ub[fix] < 0):
            raise ConfigError("cannot fix a column to 0 outside its bounds")
        lb[fix] = 0.0
        ub[fix] = 0.0
    integer = problem.integer
    # integer bounds are rounded inward once so that branching stays on the lattice
    lb = np.where(integer, np.ceil(lb - config.int_tol), lb)
    ub = np.where(integer & np.isfinite(ub), np.floor(ub + config.int_tol), ub)

    pool: list[Incumbent] = []
    best = math.inf
    tried: set[bytes] = set()
    nodes = 0

    def cutoff() -> float:
        if math.isinf(best):
            return math.inf
        return best - config.gap_tol * max(1.0, abs(best))

    def lp(lo, hi, warm=None) -> LpSolution:
        return solve_lp(
            LinearProblem(problem.c, problem.A, problem.b, lo, hi, integer), feas_tol=config.feas_tol, warm=warm
        )

    def try_incumbent(x: np.ndarray, node: int, warm=None) -> None:
        nonlocal best
        xr = np.round(x[integer])
        key = xr.tobytes()
        if key in tried:
            return
        tried.add(key)
        lo, hi = lb.copy(), ub.copy()
        if np.any(xr < lo[integer] - 0.5) or np.any(xr > hi[integer] + 0.5):
            return
        lo[integer] = xr
        hi[integer] = xr
        sol = lp(lo, hi, warm)
        if sol.optimal and sol.objective < best - 1e-9:
            best = sol.objective
            xs = sol.x.copy()
            xs[integer] = xr
            pool.append(Incumbent(xs, best, node))

    def result(status: MipStatus, bound: float) -> MipSolveResult:
        if not pool and status in (MipStatus.OPTIMAL, MipStatus.FEASIBLE):
            status = MipStatus.INFEASIBLE
        last = pool[-1] if pool else None
        return MipSolveResult(
            status,
            None if last is None else last.x,
            math.inf if last is None else last.objective,
            pool,
            nodes,
            time.perf_counter() - start,
            bound,
        )

    root = lp(lb, ub)
    nodes = 1
    if root.status is LpStatus.INFEASIBLE:
        return result(MipStatus.INFEASIBLE, math.inf)
    if root.status is LpStatus.UNBOUNDED:
        return result(MipStatus.UNBOUNDED, -math.inf)

    heap: list[tuple[float, int, np.ndarray, np.ndarray, LpSolution]] = []
    seq = 0
    heapq.heappush(heap, (root.objective, seq, lb, ub, root))
    while heap:
        bound, _, lo, hi, sol = heapq.heappop(heap)
        if bound >= cutoff():
            continue
        j = _most_fractional(sol.x, integer, config.int_tol)
        if j is None:
            try_incumbent(sol.x, nodes, sol.warm)
            continue
        if config.heuristic:
            try_incumbent(sol.x, nodes, sol.warm)
        if time.perf_counter() - start > config.time_limit:
            return result(MipStatus.TIME_LIMIT, bound)
        if config.node_limit is not None and nodes >= config.node_limit:
            return result(MipStatus.FEASIBLE if pool else MipStatus.NODE_LIMIT, bound)
        xj = sol.x[j]
        for side in (0, 1):
            clo, chi = lo.copy(), hi.copy()
            if side == 0:
                chi[j] = math.floor(xj)
            else:
                clo[j] = math.ceil(xj)
            if clo[j] > chi[j]:
                continue
            child = lp(clo, chi, sol.warm)
            nodes += 1
            if child.status is LpStatus.OPTIMAL and child.objective < cutoff():
                seq += 1
                heapq.heappush(heap, (child.objective, seq, clo, chi, child))
    return result(MipStatus.OPTIMAL, best)


def result_points(instance: MipInstance, res: MipSolveResult) -> list[Point]:
    return [instance.split(inc.x) for inc in res.pool]
