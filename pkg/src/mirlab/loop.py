"""The cutting loop: solve LP, separate (optionally on a predicted row subset), add cuts, repeat."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .bnb import SolverConfig, solve_mip
from .errors import ConfigError, ContractViolation, EnumerationTooLarge, SolverError
from .features import FeatureVector, compute_all_features
from .learning import LABEL_EPSILON, RowSelector, label_round
from .model import INT_TOL, MipInstance, Point
from .oracle import brute_force_optimum
from .separation import MirCut, SeparationConfig, run_separation
from .simplex import LinearProblem, LpSolution, solve_lp

GAP_TOL = 1e-9


class Termination(str, Enum):
    INTEGRAL_POINT = "IntegralPoint"
    NO_CUT_FOUND = "NoCutFound"
    SAME_POINT = "SamePoint"
    TIME_LIMIT = "TimeLimit"
    MAX_ROUNDS = "MaxRounds"


@dataclass
class LoopConfig:
    max_wall_time: float = 3 * 3600.0
    sep_time_limit: float = 600.0
    max_rounds: int | None = None
    stall_tol: float = 1e-9
    classifier: RowSelector | None = None
    separation: SeparationConfig = field(default_factory=SeparationConfig)
    max_cuts_per_round: int | None = None
    record_features: bool = False
    label_epsilon: float = LABEL_EPSILON
    instance_id: str = ""

    def __post_init__(self):
        if not (self.max_wall_time > 0 and self.sep_time_limit > 0):
            raise ConfigError("time limits must be positive")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")


@dataclass
class RoundTrace:
    round: int
    point: Point
    cuts_added: int
    z: float
    gap_closed: float | None
    allowed_rows: tuple[int, ...]
    sep_time: float
    z_lp: float
    z_int: float
    reason: Termination | None = None
    sep_objective: float = 0.0
    cuts: list[MirCut] = field(default_factory=list)
    features: list[FeatureVector] | None = None
    labels: np.ndarray | None = None


def gap_closed(z: float, z_lp: float, z_i: float, tol: float = GAP_TOL) -> float | None:
    """Percentage of the integrality gap closed; ``None`` when the gap is degenerate."""
    if abs(z_i - z_lp) <= GAP_TOL:
        return None
    lo, hi = min(z_lp, z_i), max(z_lp, z_i)
    if z < lo - tol or z > hi + tol:
        raise ContractViolation(f"z={z} lies outside [{lo}, {hi}]")
    pct = 100.0 * (z - z_lp) / (z_i - z_lp)
    return min(100.0, max(0.0, pct))


def integer_optimum(instance: MipInstance) -> float:
    """Known ``z_int`` if recorded, else brute force, else exact branch-and-bound."""
    if instance.z_int is not None:
        return instance.z_int
    try:
        return brute_force_optimum(instance)[0]
    except EnumerationTooLarge:
        res = solve_mip(instance, SolverConfig(time_limit=3600.0))
        if not res.pool:
            raise SolverError(f"could not solve {instance.name} to integrality")
        return res.objective


class _CutLp:
    """LP relaxation of the instance plus every cut added so far (each with its own surplus)."""

    def __init__(self, instance: MipInstance):
        self.instance = instance
        self.cut_rows: list[np.ndarray] = []
        self.cut_rhs: list[float] = []

    def add(self, cut: MirCut) -> None:
        self.cut_rows.append(np.concatenate([cut.coeff_x, cut.coeff_v]))
        self.cut_rhs.append(cut.rhs)

    def solve(self) -> LpSolution:
        inst = self.instance
        k = len(self.cut_rows)
        nstruct = inst.n + inst.p
        A = np.zeros((inst.m + k, nstruct + k))
        A[: inst.m, :nstruct] = inst.matrix
        if k:
            A[inst.m :, :nstruct] = np.array(self.cut_rows)
            A[inst.m :, nstruct:] = -np.eye(k)
        c = np.concatenate([inst.cost, np.zeros(k)])
        b = np.concatenate([inst.b, self.cut_rhs])
        sol = solve_lp(LinearProblem(c, A, b))
        if not sol.optimal:
            raise SolverError(f"LP with {k} cuts is {sol.status.value}")
        return sol

    def point(self, sol: LpSolution) -> Point:
        return self.instance.split(sol.x[: self.instance.n + self.instance.p])


def run_cutting_loop(instance: MipInstance, config: LoopConfig | None = None, z_int: float | None = None) -> list[RoundTrace]:
    config = config or LoopConfig()
    start = time.perf_counter()
    z_i = integer_optimum(instance) if z_int is None else z_int
    lp = _CutLp(instance)
    sol = lp.solve()
    z_lp = sol.objective
    point = lp.point(sol)
    z = z_lp
    all_rows = tuple(range(instance.m))
    traces: list[RoundTrace] = []

    def gap(zv: float) -> float | None:
        return gap_closed(zv, z_lp, z_i, tol=1e-6 * max(1.0, abs(z_i)))

    rnd = 0
    while True:
        rnd += 1
        if traces:
            if config.max_rounds is not None and rnd > config.max_rounds:
                traces[-1].reason = Termination.MAX_ROUNDS
                break
            if time.perf_counter() - start >= config.max_wall_time:
                traces[-1].reason = Termination.TIME_LIMIT
                break
        if point.is_integral(INT_TOL):
            traces.append(RoundTrace(rnd, point, 0, z, gap(z), all_rows, 0.0, z_lp, z_i, Termination.INTEGRAL_POINT))
            break

        features = None
        if config.classifier is not None or config.record_features:
            features = compute_all_features(instance, point, sol.duals[: instance.m], rnd, config.instance_id)
        allowed = None
        if config.classifier is not None:
            allowed = frozenset(config.classifier.select_rows(features))
        remaining = config.max_wall_time - (time.perf_counter() - start)
        sep_cfg = replace(
            config.separation.restricted(allowed),
            time_limit=max(1e-3, min(config.sep_time_limit, remaining)),
        )
        outcome = run_separation(instance, point, sep_cfg, rnd)
        cuts = outcome.cuts
        if config.max_cuts_per_round is not None:
            cuts = sorted(cuts, key=lambda c: -(c.rhs - c.lhs(point)))[: config.max_cuts_per_round]
        rows_used = all_rows if allowed is None else tuple(sorted(allowed))
        labels = label_round(outcome.cuts, instance.m, config.label_epsilon) if config.record_features else None
        trace = RoundTrace(
            rnd, point, len(cuts), z, gap(z), rows_used, outcome.elapsed, z_lp, z_i,
            sep_objective=outcome.best_objective, cuts=cuts, features=features, labels=labels,
        )
        traces.append(trace)
        if not cuts:
            trace.reason = Termination.NO_CUT_FOUND
            break
        for cut in cuts:
            lp.add(cut)
        sol = lp.solve()
        new_point = lp.point(sol)
        z = sol.objective
        trace.z = z
        trace.gap_closed = gap(z)
        if new_point.distance(point) <= config.stall_tol:
            trace.reason = Termination.SAME_POINT
            break
        point = new_point
    return traces


def final_gap(traces: list[RoundTrace]) -> float | None:
    return traces[-1].gap_closed if traces else None


def is_degenerate(traces: list[RoundTrace]) -> bool:
    return bool(traces) and traces[-1].gap_closed is None

