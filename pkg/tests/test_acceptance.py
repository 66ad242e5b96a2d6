"""Acceptance suite: one test per primary criterion, each recorded as PASS or FAIL.

The per-criterion verdicts are printed in the "acceptance criteria" section of
the pytest terminal summary.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from corpus import tiny_corpus
from test_features import IDX, SCALE_COVARIANT, SCALE_INVARIANT, scaled_row
from toys import pad, separable, xor
from mirlab.bnb import MipStatus, SolverConfig, lp_relaxation, solve_mip
from mirlab.errors import UnsupportedFeature
from mirlab.features import NUM_FEATURES, compute_all_features, compute_features
from mirlab.gbt import GbtParams, fit_gbt
from mirlab.harness import (
    COMPARE_SCHEMA,
    DATASET_SCHEMA,
    EVAL_SCHEMA,
    REPORT_SCHEMA,
    SUMMARY_SCHEMA,
    TRACE_SCHEMA,
    ExperimentConfig,
    cmd_compare,
    cmd_generate,
    cmd_report,
    cmd_train,
    final_gaps,
    read_csv,
    trace_path,
)
from mirlab.instances import PerturbationConfig, generate_family, knapsack2, random_tiny_mip
from mirlab.learning import ConstantSelector, EvalReport
from mirlab.loop import LoopConfig, run_cutting_loop
from mirlab.model import to_standard_form
from mirlab.mps import parse_mps
from mirlab.oracle import brute_force_optimum, enumerate_feasible_points
from mirlab.separation import SeparationConfig, recover_cut, run_separation, true_violation

FIXTURES = Path(__file__).parent / "fixtures"
TOL = 1e-6


def fractional_corpus(count, seed):
    """``count`` tiny bounded MIPs (n <= 8, m <= 6) whose LP optimum is fractional."""
    out = []
    rng = np.random.default_rng(seed)
    while len(out) < count:
        inst = to_standard_form(random_tiny_mip(rng, max_int=3, max_cont=1, max_rows=2))
        assert inst.n <= 8 and inst.m <= 6
        sol = lp_relaxation(inst)
        if sol.optimal:
            pt = inst.split(sol.x)
            if not pt.is_integral():
                out.append((inst, pt))
    return out


@pytest.fixture(scope="module")
def separation_runs():
    start = time.perf_counter()
    runs = [(inst, pt, run_separation(inst, pt, SeparationConfig(node_limit=300)))
            for inst, pt in fractional_corpus(50, 2024)]
    return runs, time.perf_counter() - start


def test_criterion_1_cut_validity(separation_runs, criterion):
    criterion(1, "cut validity on 50 tiny MIPs")
    runs, elapsed = separation_runs
    cuts = 0
    for inst, _, out in runs:
        points = enumerate_feasible_points(inst)
        assert points
        for sol in out.solutions:
            cut = recover_cut(sol)
            worst = min(cut.lhs(q) - cut.rhs for q in points)
            assert worst >= -TOL
            cuts += 1
    assert cuts > 0
    assert elapsed < 300
    criterion.passed(f"{cuts} cuts, {elapsed:.1f}s")


def test_criterion_2_violation_underestimated(separation_runs, criterion):
    criterion(2, "separation objective underestimates violation")
    checked = 0
    for _, pt, out in separation_runs[0]:
        for sol in out.solutions:
            assert sol.objective <= true_violation(recover_cut(sol), pt) + TOL
            checked += 1
    assert checked > 0
    criterion.passed(f"{checked} incumbents")


def test_criterion_3_solver_oracle_equivalence(criterion):
    criterion(3, "solver matches brute force; LP duals pass complementary slackness")
    cfg = SolverConfig()
    for inst in tiny_corpus(100, 77, max_int=4, max_cont=2, max_rows=3):
        z, _ = brute_force_optimum(inst)
        res = solve_mip(inst, cfg)
        assert res.status is MipStatus.OPTIMAL
        assert res.objective == pytest.approx(z, abs=TOL)
        lp = lp_relaxation(inst)
        assert lp.optimal
        d = inst.cost - inst.matrix.T @ lp.duals
        assert np.all(d >= -1e-7)
        assert np.abs(lp.x * d).max(initial=0.0) <= 1e-7
    criterion.passed()


def test_criterion_4_gap_contract(criterion):
    criterion(4, "gap closed monotone in [0, 100]; knapsack closes within 3 rounds")
    for inst in tiny_corpus(15, 11, max_int=3, max_cont=1, max_rows=2):
        traces = run_cutting_loop(inst, LoopConfig(max_rounds=4, separation=SeparationConfig(node_limit=300)))
        gaps = [t.gap_closed for t in traces if t.gap_closed is not None]
        assert all(0.0 <= g <= 100.0 for g in gaps)
        assert all(b >= a for a, b in zip(gaps, gaps[1:]))
    base = to_standard_form(knapsack2())
    z_i, _ = brute_force_optimum(base)
    z_lp = lp_relaxation(base).objective
    assert (z_lp, z_i) == (pytest.approx(-1.5), pytest.approx(-1.0))
    # the two LP vertices (1.5, 0) and (0, 1.5) cap the family at two distinct optima
    family = generate_family(base, PerturbationConfig(count=2, seed=0, neg_std=0.5))
    for inst in [base, *family.instances()]:
        traces = run_cutting_loop(inst, LoopConfig(max_rounds=3))
        assert traces[-1].z_lp == pytest.approx(lp_relaxation(inst).objective, abs=TOL)
        assert traces[-1].z_int == pytest.approx(brute_force_optimum(inst)[0], abs=TOL)
        assert traces[-1].gap_closed == pytest.approx(100.0)
    criterion.passed()


def _comparable(traces):
    return [(t.round, t.cuts_added, t.z, t.gap_closed, t.allowed_rows, t.point.x.tobytes(), t.point.v.tobytes(),
             [(c.coeff_x.tobytes(), c.coeff_v.tobytes(), c.rhs) for c in t.cuts]) for t in traces]


def test_criterion_5_full_reduced_consistency(criterion):
    criterion(5, "constant-positive reduced equals full; fixed support keeps the optimum")
    sep = SeparationConfig(node_limit=300)
    for inst in tiny_corpus(10, 5, max_int=3, max_cont=1, max_rows=2):
        full = run_cutting_loop(inst, LoopConfig(max_rounds=3, separation=sep))
        reduced = run_cutting_loop(inst, LoopConfig(max_rounds=3, separation=sep, classifier=ConstantSelector(True)))
        assert _comparable(full) == _comparable(reduced)
    checked = 0
    for inst, pt in fractional_corpus(12, 99):
        full = run_separation(inst, pt, SeparationConfig(node_limit=20000))
        if full.mip.status is not MipStatus.OPTIMAL or not full.solutions:
            continue
        best = max(full.solutions, key=lambda s: s.objective)
        support = frozenset(int(j) for j in np.flatnonzero(np.abs(best.lam) > 1e-9))
        reduced = run_separation(inst, pt, SeparationConfig(node_limit=20000, allowed_rows=support))
        assert reduced.best_objective >= best.objective - TOL
        checked += 1
    assert checked >= 5
    criterion.passed(f"{checked} fixed-support checks")


def test_criterion_6_feature_contract(criterion):
    criterion(6, "54 finite deterministic features on 1000 rows with scale checks")
    rng = np.random.default_rng(6)
    rows = 0
    while rows < 1000:
        g = random_tiny_mip(rng, max_int=6, max_cont=2, max_rows=4)
        inst = to_standard_form(g)
        pt = inst.split(rng.random(inst.n + inst.p) * rng.integers(1, 4))
        duals = rng.normal(size=inst.m)
        a = compute_all_features(inst, pt, duals)
        b = compute_all_features(inst, pt, duals)
        for fa, fb in zip(a, b):
            assert fa.values.shape == (NUM_FEATURES,) == (54,)
            assert np.all(np.isfinite(fa.values))
            assert fa.values.tobytes() == fb.values.tobytes()
        rows += len(a)
        j = int(rng.integers(0, g.num_rows))
        inst2 = to_standard_form(scaled_row(g, j, 3.0))
        f1 = compute_features(inst, pt, np.zeros(inst.m), j).values
        f2 = compute_features(inst2, pt, np.zeros(inst.m), j).values
        for name in SCALE_INVARIANT:
            assert f2[IDX[name]] == pytest.approx(f1[IDX[name]], abs=1e-9)
        for name in SCALE_COVARIANT:
            assert f2[IDX[name]] == pytest.approx(3 * f1[IDX[name]], abs=1e-9)
    criterion.passed(f"{rows} rows")


def test_criterion_7_learner_sanity(criterion):
    criterion(7, "GBT toy accuracy and confusion arithmetic")
    params = GbtParams(n_estimators=100, max_depth=5, learning_rate=0.1)
    X, y = separable()
    acc_sep = float(np.mean(fit_gbt(pad(X), y, params).predict(pad(X)) == y))
    X, y = xor()
    acc_xor = float(np.mean(fit_gbt(pad(X), y, params).predict(pad(X)) == y))
    assert acc_sep >= 0.99
    assert acc_xor >= 0.95
    rep = EvalReport(tp=3, fp=1, fn=2, tn=4)
    assert (rep.accuracy, rep.precision, rep.recall) == (pytest.approx(0.7), pytest.approx(0.75), pytest.approx(0.6))
    y_true = [1, 1, 1, 0, 1, 1, 0, 0, 0, 0]
    y_pred = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    assert EvalReport.from_predictions(y_true, y_pred) == rep
    criterion.passed(f"separable {acc_sep:.3f}, xor {acc_xor:.3f}")


@pytest.mark.slow
def test_criterion_8_end_to_end(tmp_path, criterion):
    criterion(8, "generate, train, compare on a family of 20 in under 30 min")
    start = time.perf_counter()
    common = dict(base="builtin:synth0", seed=0, max_rounds=5, node_limit=1000, sep_time_limit=10.0)
    gen = ExperimentConfig(out=tmp_path / "gen", family_size=20, **common)
    manifest = cmd_generate(gen)
    assert len(manifest["variations"]) == 20
    assert len(manifest["kept"]) >= 5
    train = cmd_train(tmp_path / "gen" / "dataset.csv", ExperimentConfig(out=tmp_path / "model", **common))
    assert train["test"]
    cmd_compare(tmp_path / "gen" / "manifest.json", tmp_path / "model" / "model.json",
                ExperimentConfig(out=tmp_path / "cmp", **common))
    cmd_report(tmp_path / "cmp" / "compare.csv", ExperimentConfig(out=tmp_path / "rep", **common))
    elapsed = time.perf_counter() - start
    assert elapsed < 1800

    for vid in manifest["kept"]:
        read_csv(trace_path(tmp_path / "gen", vid), TRACE_SCHEMA)
    read_csv(tmp_path / "gen" / "dataset.csv", DATASET_SCHEMA)
    read_csv(tmp_path / "model" / "eval.csv", EVAL_SCHEMA)
    read_csv(tmp_path / "rep" / "report.csv", REPORT_SCHEMA)
    read_csv(tmp_path / "rep" / "summary.csv", SUMMARY_SCHEMA)
    json.loads((tmp_path / "model" / "model.json").read_text())

    finals = final_gaps(read_csv(tmp_path / "cmp" / "compare.csv", COMPARE_SCHEMA))
    full = [g for g in finals[("test", "full")].values() if g is not None]
    reduced = [g for g in finals[("test", "reduced")].values() if g is not None]
    assert full and reduced
    ratio = np.mean(reduced) / np.mean(full)
    detail = f"{elapsed:.0f}s, test-side reduced/full final gap {np.mean(reduced):.1f}/{np.mean(full):.1f} = {ratio:.2f}"
    if ratio < 0.5:
        # reported as a failed criterion; the pipeline contract above still holds
        criterion.failed(detail)
        pytest.xfail(f"reduced separator below half of the full final gap: {detail}")
    criterion.passed(detail)


def test_criterion_9_mps_round_trip(criterion):
    criterion(9, "MPS fixtures parse; RANGES and free variables rejected")
    minimal = parse_mps(FIXTURES / "minimal.mps")
    mixed = parse_mps(FIXTURES / "fixed_mixed.mps")
    free_fmt = parse_mps(FIXTURES / "free_format.mps")
    assert (minimal.A.shape, int(minimal.integer.sum()), list(minimal.senses)) == ((1, 1), 0, ["L"])
    assert (mixed.A.shape, int(mixed.integer.sum()), list(mixed.senses)) == ((3, 5), 3, ["L", "G", "E"])
    assert (free_fmt.A.shape, int(free_fmt.integer.sum()), list(free_fmt.senses)) == ((1, 2), 2, ["L"])
    with pytest.raises(UnsupportedFeature, match="RANGES") as exc:
        parse_mps(FIXTURES / "ranges.mps")
    assert exc.value.line == 9
    with pytest.raises(UnsupportedFeature, match="free variable"):
        parse_mps(FIXTURES / "free_var.mps")
    criterion.passed()
