import itertools

import pytest
from hypothesis import given, settings

from conftest import small_instances
from rrrp.flow import FlowNetwork, InfeasibleFlow, min_cost_flow, solve_lagrangian, solve_min_weight
from rrrp.model import cost, lagrangian_value, satisfies_matching, weight
from rrrp.oracle import brute_force_lagrangian, enumerate_schedules


def test_lambda_zero_takes_the_null_edge(tiny):
    s = solve_lagrangian(tiny, 0.0)
    assert s.edges == {1}
    assert lagrangian_value(s, tiny, 0.0) == 0.0


def test_lambda_100_takes_the_detour(tiny):
    s = solve_lagrangian(tiny, 100.0)
    assert s.edges == {0}
    assert lagrangian_value(s, tiny, 100.0) == pytest.approx(60.0)


def test_negative_multiplier_rejected(tiny):
    with pytest.raises(ValueError):
        solve_lagrangian(tiny, -1.0)


def test_single_arc():
    net = FlowNetwork(2, 0, 1, 1)
    net.add_arc(0, 1, 1, 3.5)
    flows, (c, _) = min_cost_flow(net)
    assert flows == [1] and c == 3.5


def test_demand_above_cut_capacity():
    net = FlowNetwork(2, 0, 1, 2)
    net.add_arc(0, 1, 1, 1.0)
    with pytest.raises(InfeasibleFlow):
        min_cost_flow(net)


def test_three_by_three_assignment_matches_enumeration():
    cost_m = [[4.0, 1.0, 3.0], [2.0, 0.5, 5.0], [3.0, 2.0, 2.5]]
    net = FlowNetwork(8, 0, 7, 3)
    for i in range(3):
        net.add_arc(0, 1 + i)
        for j in range(3):
            net.add_arc(1 + i, 4 + j, 1, cost_m[i][j])
    for j in range(3):
        net.add_arc(4 + j, 7)
    _, (c, _) = min_cost_flow(net)
    best = min(sum(cost_m[i][p[i]] for i in range(3)) for p in itertools.permutations(range(3)))
    assert c == pytest.approx(best)


@settings(max_examples=80, deadline=None)
@given(small_instances(max_groups=4, max_nodes=3))
def test_matches_exhaustive_minimum(inst):
    for lam in (0.0, 0.5, 3.0, 50.0):
        s = solve_lagrangian(inst, lam)
        assert satisfies_matching(s, inst)
        w_best, a_best, _ = brute_force_lagrangian(inst, lam)
        assert lagrangian_value(s, inst, lam) == pytest.approx(w_best, abs=1e-9)
        assert weight(s, inst) == pytest.approx(a_best, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(small_instances(max_groups=4, max_nodes=3))
def test_multiplier_monotonicity(inst):
    lams = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0]
    sols = [solve_lagrangian(inst, lam) for lam in lams]
    for s1, s2 in zip(sols, sols[1:]):
        assert weight(s2, inst) <= weight(s1, inst) + 1e-9
        assert cost(s2, inst) >= cost(s1, inst) - 1e-9


@settings(max_examples=40, deadline=None)
@given(small_instances(max_groups=3, max_nodes=3))
def test_min_weight_schedule(inst):
    s = solve_min_weight(inst)
    best = min(weight(x, inst) for x in enumerate_schedules(inst))
    assert weight(s, inst) == pytest.approx(best, abs=1e-9)
