import pytest

from corpus import tiny_corpus
from mirlab.errors import ConfigError, ContractViolation
from mirlab.learning import ConstantSelector
from mirlab.loop import LoopConfig, Termination, gap_closed, run_cutting_loop
from mirlab.model import GeneralMip, to_standard_form
from mirlab.oracle import brute_force_optimum
from mirlab.separation import SeparationConfig, validate_cut

FAST = SeparationConfig(node_limit=300)


def test_gap_closed_formula():
    assert gap_closed(-1.5, -1.5, -1.0) == 0.0
    assert gap_closed(-1.0, -1.5, -1.0) == 100.0
    assert gap_closed(-1.25, -1.5, -1.0) == pytest.approx(50.0)
    assert gap_closed(3.0, 3.0, 3.0) is None
    with pytest.raises(ContractViolation):
        gap_closed(-2.0, -1.5, -1.0)


def test_loop_config_validation():
    with pytest.raises(ConfigError):
        LoopConfig(max_wall_time=0)
    with pytest.raises(ConfigError):
        LoopConfig(max_rounds=0)


def test_integral_relaxation_single_trace():
    inst = to_standard_form(GeneralMip(obj=[-1.0, -1.0], A=[[1.0, 1.0]], senses=["L"], rhs=[2.0], integer=[True, True]))
    traces = run_cutting_loop(inst)
    assert len(traces) == 1
    assert traces[0].reason is Termination.INTEGRAL_POINT
    assert traces[0].gap_closed is None


def test_knapsack_closes_gap(knapsack):
    z_i, _ = brute_force_optimum(knapsack)
    traces = run_cutting_loop(knapsack)
    assert traces[0].z_lp == pytest.approx(-1.5)
    assert z_i == -1.0
    closed = [t.gap_closed for t in traces]
    reached = [t.round for t in traces if t.gap_closed is not None and t.gap_closed >= 100.0 - 1e-6]
    assert reached and reached[0] <= 3
    assert all(b >= a - 1e-9 for a, b in zip(closed, closed[1:]))


def test_constant_negative_selector_stops_after_first_round(knapsack):
    traces = run_cutting_loop(knapsack, LoopConfig(classifier=ConstantSelector(False)))
    assert len(traces) == 1
    assert traces[0].reason is Termination.NO_CUT_FOUND
    assert traces[0].gap_closed == 0.0
    assert traces[0].allowed_rows == ()


def test_max_rounds_terminates():
    inst = tiny_corpus(1, 9, max_int=4, max_rows=3)[0]
    traces = run_cutting_loop(inst, LoopConfig(max_rounds=1, separation=FAST))
    assert len(traces) == 1
    assert traces[0].reason in (Termination.MAX_ROUNDS, Termination.INTEGRAL_POINT, Termination.NO_CUT_FOUND,
                                Termination.SAME_POINT)


def _nontrivial(count, seed):
    out = []
    for inst in tiny_corpus(count, seed, max_int=3, max_cont=1, max_rows=2):
        try:
            z_i, _ = brute_force_optimum(inst)
        except Exception:
            continue
        out.append((inst, z_i))
    return out


def test_loop_invariants_on_tiny_corpus():
    for inst, z_i in _nontrivial(10, 5):
        traces = run_cutting_loop(inst, LoopConfig(separation=FAST, max_rounds=4), z_int=z_i)
        assert [t.round for t in traces] == list(range(1, len(traces) + 1))
        assert traces[-1].reason is not None
        assert all(t.reason is None for t in traces[:-1])
        zs = [t.z for t in traces]
        assert all(b >= a - 1e-7 for a, b in zip(zs, zs[1:]))
        gaps = [t.gap_closed for t in traces]
        if gaps[0] is not None:
            assert all(0.0 <= g <= 100.0 for g in gaps)
            assert all(b >= a - 1e-9 for a, b in zip(gaps, gaps[1:]))
        for t in traces:
            for cut in t.cuts:
                assert validate_cut(cut, inst)


def test_constant_positive_selector_matches_full():
    for inst, z_i in _nontrivial(6, 13):
        full = run_cutting_loop(inst, LoopConfig(separation=FAST, max_rounds=3), z_int=z_i)
        red = run_cutting_loop(inst, LoopConfig(separation=FAST, max_rounds=3, classifier=ConstantSelector(True)),
                               z_int=z_i)
        assert [(t.round, t.cuts_added, t.z, t.gap_closed, t.allowed_rows, t.reason) for t in full] == \
               [(t.round, t.cuts_added, t.z, t.gap_closed, t.allowed_rows, t.reason) for t in red]


def test_recorded_labels_and_features(knapsack):
    traces = run_cutting_loop(knapsack, LoopConfig(record_features=True))
    first = traces[0]
    assert len(first.features) == knapsack.m
    assert first.labels.shape == (knapsack.m,)
    assert first.labels[0] == 1
