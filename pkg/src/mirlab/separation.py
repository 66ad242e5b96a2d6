"""MIR cut separation as a MIP, cut recovery, and validity checks.

Given ``C v + A x = b`` and a fractional point ``(x*, v*)`` the separation
MIP looks for an aggregation ``lam`` and a rounding ``(ahat, abar, bhat,
bbar)`` such that

    cplus.v + ahat.x + bhat * abar.x >= bhat * (bbar + 1)

is valid and violated at the point.  The violation ``bhat * Delta -
(cplus.v* + ahat.x*)`` with ``Delta = bbar + 1 - abar.x*`` is bilinear; it is
underestimated by restricting ``bhat`` to sums of ``2^-k`` and linearizing
``bhat * Delta`` with one binary ``pi_k`` per bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .bnb import MipSolveResult, SolverConfig, solve_mip
from .errors import ConfigError, InfeasibleSolution, ShapeError
from .model import INT_TOL, MipInstance, Point
from .oracle import MAX_LATTICE_POINTS, enumerate_feasible_points
from .simplex import LinearProblem

RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class SeparationConfig:
    K: int = 6
    lambda_bound: float = 1.0
    time_limit: float = 600.0
    node_limit: int | None = None
    allowed_rows: frozenset[int] | None = None
    violation_cutoff: float = 1e-4

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if not self.lambda_bound > 0:
            raise ConfigError("lambda_bound must be positive")
        if not self.time_limit > 0:
            raise ConfigError("time_limit must be positive")
        if self.allowed_rows is not None and not isinstance(self.allowed_rows, frozenset):
            object.__setattr__(self, "allowed_rows", frozenset(int(j) for j in self.allowed_rows))

    @property
    def epsilons(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, self.K + 1)

    def restricted(self, rows: Iterable[int] | None) -> SeparationConfig:
        return SeparationConfig(
            self.K, self.lambda_bound, self.time_limit, self.node_limit,
            None if rows is None else frozenset(rows), self.violation_cutoff,
        )


@dataclass(frozen=True)
class Layout:
    """Column slices of the structural variables, in model order."""

    lam: slice
    cplus: slice
    ahat: slice
    abar: slice
    bhat: int
    bbar: int
    pi: slice
    delta: int
    delta_k: slice
    num_structural: int


@dataclass
class SeparationModel:
    instance: MipInstance
    point: Point
    config: SeparationConfig
    problem: LinearProblem
    layout: Layout
    row_groups: dict[str, slice]
    alpha_box: np.ndarray
    beta_box: int


def _layout(m: int, n: int, p: int, K: int) -> Layout:
    pos = 0

    def take(k: int) -> slice:
        nonlocal pos
        s = slice(pos, pos + k)
        pos += k
        return s

    lam, cplus, ahat, abar = take(m), take(p), take(n), take(n)
    bhat, bbar = take(1).start, take(1).start
    pi = take(K)
    delta = take(1).start
    delta_k = take(K)
    return Layout(lam, cplus, ahat, abar, bhat, bbar, pi, delta, delta_k, pos)


def build_separation_model(instance: MipInstance, point: Point, config: SeparationConfig) -> SeparationModel:
    """Assemble the separation MIP in solver form (inequalities get their own slacks)."""
    instance.check_point(point)
    m, n, p, K = instance.m, instance.n, instance.p, config.K
    L = config.lambda_bound
    A, C, b = instance.A, instance.C, instance.b
    xs, vs = point.x, point.v
    eps = config.epsilons
    lay = _layout(m, n, p, K)
    S = lay.num_structural

    alpha_box = np.ceil(L * np.abs(A).sum(axis=0)) + 1
    beta_box = int(math.ceil(L * np.abs(b).sum())) + 1

    rows: list[np.ndarray] = []
    senses: list[str] = []
    rhs: list[float] = []
    groups: dict[str, slice] = {}

    def new_row() -> np.ndarray:
        return np.zeros(S)

    def group(name: str, start: int):
        groups[name] = slice(start, len(rows))

    # cplus_i - lam.C_i >= 0
    start = len(rows)
    for i in range(p):
        r = new_row()
        r[lay.cplus.start + i] = 1.0
        r[lay.lam] = -C[:, i]
        rows.append(r), senses.append("G"), rhs.append(0.0)
    group("cplus", start)
    # ahat_i + abar_i - lam.A_i >= 0
    start = len(rows)
    for i in range(n):
        r = new_row()
        r[lay.ahat.start + i] = 1.0
        r[lay.abar.start + i] = 1.0
        r[lay.lam] = -A[:, i]
        rows.append(r), senses.append("G"), rhs.append(0.0)
    group("alpha", start)
    # bhat + bbar - lam.b <= 0
    start = len(rows)
    r = new_row()
    r[lay.bhat] = 1.0
    r[lay.bbar] = 1.0
    r[lay.lam] = -b
    rows.append(r), senses.append("L"), rhs.append(0.0)
    group("beta", start)
    # bhat - sum eps_k pi_k >= 0
    start = len(rows)
    r = new_row()
    r[lay.bhat] = 1.0
    r[lay.pi] = -eps
    rows.append(r), senses.append("G"), rhs.append(0.0)
    group("bhat_bits", start)
    # Delta - bbar + abar.x* = 1
    start = len(rows)
    r = new_row()
    r[lay.delta] = 1.0
    r[lay.bbar] = -1.0
    r[lay.abar] = xs
    rows.append(r), senses.append("E"), rhs.append(1.0)
    group("delta_def", start)
    # Delta_k - Delta <= 0
    start = len(rows)
    for k in range(K):
        r = new_row()
        r[lay.delta_k.start + k] = 1.0
        r[lay.delta] = -1.0
        rows.append(r), senses.append("L"), rhs.append(0.0)
    group("delta_k_delta", start)
    # Delta_k - pi_k <= 0
    start = len(rows)
    for k in range(K):
        r = new_row()
        r[lay.delta_k.start + k] = 1.0
        r[lay.pi.start + k] = -1.0
        rows.append(r), senses.append("L"), rhs.append(0.0)
    group("delta_k_pi", start)

    nrows = len(rows)
    n_slack = sum(1 for s in senses if s != "E")
    M = np.zeros((nrows, S + n_slack))
    M[:, :S] = np.array(rows)
    col = S
    for j, s in enumerate(senses):
        if s == "E":
            continue
        M[j, col] = 1.0 if s == "L" else -1.0
        col += 1

    c = np.zeros(S + n_slack)
    c[lay.delta_k] = -eps
    c[lay.cplus] = vs
    c[lay.ahat] = xs

    lb = np.zeros(S + n_slack)
    ub = np.full(S + n_slack, np.inf)
    lam_ub = np.full(m, L)
    if config.allowed_rows is not None:
        bad = [j for j in config.allowed_rows if not 0 <= j < m]
        if bad:
            raise ShapeError(f"allowed row {bad[0]} out of range for {m} rows")
        mask = np.zeros(m, bool)
        mask[list(config.allowed_rows)] = True
        lam_ub = np.where(mask, L, 0.0)
    lb[lay.lam] = -lam_ub
    ub[lay.lam] = lam_ub
    ub[lay.ahat] = 1.0
    lb[lay.abar] = -alpha_box
    ub[lay.abar] = alpha_box
    ub[lay.bhat] = 1.0
    lb[lay.bbar] = -beta_box
    ub[lay.bbar] = beta_box
    ub[lay.pi] = 1.0
    spread = float(alpha_box @ np.abs(xs))
    lb[lay.delta] = -beta_box + 1 - spread
    ub[lay.delta] = beta_box + 1 + spread
    ub[lay.delta_k] = 1.0

    integer = np.zeros(S + n_slack, bool)
    integer[lay.abar] = True
    integer[lay.bbar] = True
    integer[lay.pi] = True

    problem = LinearProblem(c, M, np.array(rhs), lb, ub, integer)
    return SeparationModel(instance, point, config, problem, lay, groups, alpha_box, beta_box)


@dataclass
class SeparationSolution:
    model: SeparationModel
    lam: np.ndarray
    c_plus: np.ndarray
    alpha_hat: np.ndarray
    alpha_bar: np.ndarray
    beta_hat: float
    beta_bar: float
    pi: np.ndarray
    delta: float
    delta_k: np.ndarray
    objective: float = field(init=False)

    def __post_init__(self):
        eps = self.model.config.epsilons
        pt = self.model.point
        self.objective = float(eps @ self.delta_k - (self.c_plus @ pt.v + self.alpha_hat @ pt.x))

    @classmethod
    def from_vector(cls, model: SeparationModel, z: np.ndarray) -> SeparationSolution:
        lay = model.layout
        return cls(
            model,
            z[lay.lam].copy(),
            z[lay.cplus].copy(),
            z[lay.ahat].copy(),
            z[lay.abar].copy(),
            float(z[lay.bhat]),
            float(z[lay.bbar]),
            z[lay.pi].copy(),
            float(z[lay.delta]),
            z[lay.delta_k].copy(),
        )

    @classmethod
    def zero(cls, model: SeparationModel) -> SeparationSolution:
        inst, K = model.instance, model.config.K
        return cls(
            model, np.zeros(inst.m), np.zeros(inst.p), np.zeros(inst.n), np.zeros(inst.n),
            0.0, 0.0, np.zeros(K), 1.0, np.zeros(K),
        )

    def residuals(self) -> dict[str, float]:
        """Largest violation of each constraint group (0 when satisfied)."""
        inst, pt, cfg = self.model.instance, self.model.point, self.model.config
        eps = cfg.epsilons
        lam = self.lam
        L = cfg.lambda_bound

        def neg(a) -> float:
            return float(np.max(np.maximum(-np.asarray(a, dtype=float), 0.0), initial=0.0))

        def frac(a) -> float:
            a = np.atleast_1d(np.asarray(a, dtype=float))
            return float(np.max(np.abs(a - np.round(a)), initial=0.0))

        res = {
            "cplus": neg(self.c_plus - lam @ inst.C),
            "alpha": neg(self.alpha_hat + self.alpha_bar - lam @ inst.A),
            "beta": neg(lam @ inst.b - self.beta_hat - self.beta_bar),
            "cplus_nonneg": neg(self.c_plus),
            "ahat_box": max(neg(self.alpha_hat), neg(1.0 - self.alpha_hat)),
            "bhat_box": max(neg(self.beta_hat), neg(1.0 - self.beta_hat)),
            "bhat_bits": neg(self.beta_hat - eps @ self.pi),
            "delta_def": abs(self.delta - (self.beta_bar + 1 - self.alpha_bar @ pt.x)),
            "delta_k_delta": neg(self.delta - self.delta_k),
            "delta_k_pi": neg(self.pi - self.delta_k),
            "pi_binary": max(frac(self.pi), neg(self.pi), neg(1.0 - self.pi)),
            "abar_integer": frac(self.alpha_bar),
            "bbar_integer": frac(self.beta_bar),
            "lambda_box": neg(L - np.abs(lam)),
        }
        allowed = cfg.allowed_rows
        if allowed is not None:
            off = np.ones(inst.m, bool)
            off[list(allowed)] = False
            res["lambda_fixed"] = float(np.max(np.abs(lam[off]), initial=0.0))
        return res


@dataclass
class MirCut:
    """``coeff_v.v + coeff_x.x >= rhs``."""

    coeff_v: np.ndarray
    coeff_x: np.ndarray
    rhs: float
    lam: np.ndarray
    round: int = 0

    def lhs(self, point: Point) -> float:
        return float(self.coeff_v @ point.v + self.coeff_x @ point.x)

    def normalized(self) -> np.ndarray:
        vec = np.concatenate([self.coeff_x, self.coeff_v, [self.rhs]])
        scale = np.max(np.abs(vec), initial=0.0)
        return vec if scale == 0 else vec / scale


def recover_cut(sol: SeparationSolution, round_index: int = 0) -> MirCut:
    res = sol.residuals()
    worst = max(res, key=res.get)
    if res[worst] > RESIDUAL_TOL:
        raise InfeasibleSolution(f"constraint group {worst!r} violated by {res[worst]:.3g}")
    return MirCut(
        coeff_v=sol.c_plus.copy(),
        coeff_x=sol.alpha_hat + sol.beta_hat * sol.alpha_bar,
        rhs=sol.beta_hat * (sol.beta_bar + 1.0),
        lam=sol.lam.copy(),
        round=round_index,
    )


def true_violation(cut: MirCut, point: Point) -> float:
    if point.x.shape != cut.coeff_x.shape or point.v.shape != cut.coeff_v.shape:
        raise ShapeError("cut and point dimensions differ")
    return cut.rhs - cut.lhs(point)


def dedupe_cuts(cuts: list[MirCut], tol: float = 1e-9) -> list[MirCut]:
    kept: list[MirCut] = []
    keys: list[np.ndarray] = []
    for cut in cuts:
        key = cut.normalized()
        if any(np.max(np.abs(key - k)) <= tol for k in keys):
            continue
        kept.append(cut)
        keys.append(key)
    return kept


@dataclass
class SeparationOutcome:
    cuts: list[MirCut]
    solutions: list[SeparationSolution]
    mip: MipSolveResult | None
    model: SeparationModel | None
    elapsed: float = 0.0

    @property
    def best_objective(self) -> float:
        return max((s.objective for s in self.solutions), default=0.0)


def run_separation(
    instance: MipInstance,
    point: Point,
    config: SeparationConfig,
    round_index: int = 0,
) -> SeparationOutcome:
    """Solve the separation MIP and turn its incumbent pool into cuts.

    ``solutions`` holds every pool incumbent (useful for labels); ``cuts``
    only those above ``violation_cutoff``, deduplicated.
    """
    start = time.perf_counter()
    instance.check_point(point)
    if point.is_integral(INT_TOL):
        return SeparationOutcome([], [], None, None, 0.0)
    if config.allowed_rows is not None and not config.allowed_rows:
        return SeparationOutcome([], [], None, None, time.perf_counter() - start)
    model = build_separation_model(instance, point, config)
    solver_cfg = SolverConfig(time_limit=config.time_limit, node_limit=config.node_limit)
    mip = solve_mip(model.problem, solver_cfg)
    solutions = [SeparationSolution.from_vector(model, inc.x) for inc in mip.pool]
    cuts = []
    for sol in solutions:
        if sol.objective > config.violation_cutoff:
            cuts.append(recover_cut(sol, round_index))
    return SeparationOutcome(dedupe_cuts(cuts), solutions, mip, model, time.perf_counter() - start)


def separate(instance: MipInstance, point: Point, config: SeparationConfig, round_index: int = 0) -> list[MirCut]:
    return run_separation(instance, point, config, round_index).cuts


def validate_cut(
    cut: MirCut,
    instance: MipInstance,
    box: np.ndarray | None = None,
    tol: float = 1e-6,
    max_points: int = MAX_LATTICE_POINTS,
) -> bool:
    """True iff every enumerated feasible point satisfies the cut within ``tol``."""
    points = enumerate_feasible_points(instance, box, max_points)
    return all(cut.lhs(pt) >= cut.rhs - tol for pt in points)

