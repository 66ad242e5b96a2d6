import numpy as np
import pytest

from mirlab.errors import EnumerationTooLarge, Infeasible
from mirlab.model import GeneralMip, MipInstance, to_standard_form
from mirlab.oracle import brute_force_optimum, enumerate_feasible_points, enumeration_box


def test_single_variable_optimum():
    inst = to_standard_form(GeneralMip(obj=[-1.0], A=[[1.0]], senses=["L"], rhs=[2.0], integer=[True]))
    z, pt = brute_force_optimum(inst, box=[2])
    assert z == -2.0
    assert pt.x[0] == 2.0


def test_infeasible_instance():
    inst = MipInstance(A=[[1.0]], C=[[1.0]], b=[-1.0], f=[0.0], g=[0.0])
    with pytest.raises(Infeasible):
        brute_force_optimum(inst, box=[3])


def test_knapsack_optimum(knapsack):
    z, pt = brute_force_optimum(knapsack)
    assert z == -1.0
    assert pt.x.sum() == 1.0


def test_knapsack_feasible_points(knapsack):
    pts = enumerate_feasible_points(knapsack, box=[1, 1])
    got = sorted((tuple(p.x), p.v[0]) for p in pts)
    assert got == [((0.0, 0.0), 3.0), ((0.0, 1.0), 1.0), ((1.0, 0.0), 1.0)]


def test_empty_feasible_set():
    inst = MipInstance(A=[[1.0]], C=[[1.0]], b=[-1.0], f=[0.0], g=[0.0])
    assert enumerate_feasible_points(inst, box=[2]) == []


def test_zero_box_gives_origin_completion(knapsack):
    pts = enumerate_feasible_points(knapsack, box=[0, 0])
    assert len(pts) == 1
    np.testing.assert_array_equal(pts[0].x, [0.0, 0.0])
    np.testing.assert_array_equal(pts[0].v, [3.0])


def test_box_cap():
    # x0 - x1 - ... = 1 + v bounds nothing, so every variable gets the default cap
    a = -np.ones((1, 7))
    a[0, 0] = 1.0
    inst = MipInstance(A=a, C=[[-1.0]], b=[1.0], f=np.zeros(7), g=[0.0])
    box = enumeration_box(inst)
    assert np.all(box == 10)
    with pytest.raises(EnumerationTooLarge):
        brute_force_optimum(inst)


def test_vertex_completions_use_general_continuous_part():
    # v0 + v1 = 2 - x, two continuous columns in one row: vertices put everything on one column
    inst = MipInstance(A=[[1.0]], C=[[1.0, 1.0]], b=[2.0], f=[0.0], g=[1.0, 2.0])
    pts = enumerate_feasible_points(inst, box=[2])
    by_x = {}
    for p in pts:
        by_x.setdefault(p.x[0], []).append(tuple(p.v))
    assert sorted(by_x[0.0]) == [(0.0, 2.0), (2.0, 0.0)]
    assert by_x[2.0] == [(0.0, 0.0)]
    z, _ = brute_force_optimum(inst, box=[2])
    assert z == 0.0
