import math

import pytest
from hypothesis import given, settings

from conftest import one_uav, small_instances
from rrrp.model import (Edge, InstanceError, RendezvousInstance, Schedule, cost, is_feasible,
                        prune_dominated, success_probability, ugv_loads, weight)
from rrrp.oracle import exact_solve, OracleInfeasible
from rrrp.flow import solve_lagrangian
from rrrp.oracle import brute_force_lagrangian


def two_edge_instance():
    edges = (Edge(0, 0, 10.0, 0.5), Edge(2, 1, 7.0, 0.3), Edge(1, 2, 0.0, 1.0), Edge(3, 3, 0.0, 1.0))
    return RendezvousInstance(((0, 1), (2, 3)), (0, 1, 2, 3), edges, 5.0, 1, (2, 3))


def test_cost_and_weight_are_additive():
    inst = two_edge_instance()
    assert (cost(Schedule.of([0]), inst), weight(Schedule.of([0]), inst)) == (10.0, 0.5)
    s = Schedule.of([0, 1])
    assert cost(s, inst) == 17.0
    assert weight(s, inst) == pytest.approx(0.8)


def test_null_schedule_costs_nothing():
    inst = two_edge_instance()
    assert cost(inst.null_schedule(), inst) == 0.0


def test_dangling_edge_id_is_rejected():
    with pytest.raises(InstanceError):
        cost(Schedule.of([9]), two_edge_instance())


def test_feasibility_report_lists_each_problem():
    inst = two_edge_instance().with_budget(0.1)
    rep = is_feasible(Schedule.of([0, 1]), inst)
    assert not rep
    assert any("exceeds budget" in m for m in rep.violations)
    rep = is_feasible(Schedule.of([0]), inst)
    assert any("group 1 has 0" in m for m in rep.violations)


def test_budget_slack_is_absolute_1e9():
    inst = one_uav(budget=0.5)
    assert is_feasible(Schedule.of([0]), inst.with_budget(0.5 - 5e-10))
    assert not is_feasible(Schedule.of([0]), inst.with_budget(0.5 - 5e-9))


def test_shared_copy_is_infeasible():
    edges = (Edge(0, 0, 1.0, 0.1), Edge(1, 0, 1.0, 0.1), Edge(2, 1, 0.0, 1.0), Edge(3, 2, 0.0, 1.0))
    inst = RendezvousInstance(((0, 2), (1, 3)), (0, 1, 2), edges, 5.0, 1, (2, 3))
    s = Schedule.of([0, 1])
    assert ugv_loads(s, inst)[0] == 2
    assert not is_feasible(s, inst)


@pytest.mark.parametrize("bad", [
    dict(budget=-1.0),
    dict(capacity=0),
])
def test_structural_checks(bad):
    base = dict(uav_groups=((0, 1),), ugv_vertices=(0, 1),
                edges=(Edge(0, 0, 10.0, 0.5), Edge(1, 1, 0.0, 2.0)), budget=1.0)
    base.update(bad)
    with pytest.raises(InstanceError):
        RendezvousInstance(**base)


def test_overlapping_groups_rejected():
    with pytest.raises(InstanceError):
        RendezvousInstance(((0, 1), (1, 2)), (0,), (Edge(0, 0, 1.0, 0.0),), 1.0)


def test_probability_outside_unit_interval_rejected():
    with pytest.raises(InstanceError):
        Edge.from_prob(0, 0, 1.0, 0.0)
    with pytest.raises(InstanceError):
        Edge.from_prob(0, 0, 1.0, 1.5)


def test_json_round_trip_recomputes_weights():
    inst = one_uav()
    back = RendezvousInstance.loads(inst.dumps())
    assert back.budget == inst.budget
    for e, f in zip(inst.edges, back.edges):
        assert f.weight == pytest.approx(e.weight, rel=1e-12)
        assert f.cost == e.cost
    assert back.null_edges == inst.null_edges


def test_null_edges_inferred_when_absent():
    doc = one_uav().to_dict()
    del doc["null_edges"]
    assert RendezvousInstance.from_dict(doc).null_edges == (1,)


def test_malformed_document_raises():
    with pytest.raises(InstanceError):
        RendezvousInstance.from_dict({"edges": [{"u": 0}]})


@settings(max_examples=60, deadline=None)
@given(small_instances())
def test_weight_is_minus_log_probability(inst):
    s = solve_lagrangian(inst, 1.0)
    assert math.exp(-weight(s, inst)) == pytest.approx(success_probability(s, inst), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(small_instances())
def test_null_schedule_meets_matching_constraints(inst):
    rep = is_feasible(inst.null_schedule(), inst.with_budget(1e9))
    assert rep.ok


@settings(max_examples=40, deadline=None)
@given(small_instances(max_groups=3, max_nodes=3))
def test_pruning_keeps_the_budgeted_optimum(inst):
    sub, back = prune_dominated(inst)
    try:
        opt = cost(exact_solve(inst), inst)
    except OracleInfeasible:
        with pytest.raises(OracleInfeasible):
            exact_solve(sub)
        return
    s = exact_solve(sub)
    assert cost(s, sub) == pytest.approx(opt, abs=1e-9)
    assert is_feasible(Schedule.of(back[list(s.edges)]), inst)


@settings(max_examples=30, deadline=None)
@given(small_instances(max_groups=3, max_nodes=3))
def test_pruning_keeps_every_lagrangian_optimum_value(inst):
    sub, _ = prune_dominated(inst)
    for lam in (0.0, 0.7, 5.0, 40.0):
        assert brute_force_lagrangian(sub, lam)[0] == pytest.approx(brute_force_lagrangian(inst, lam)[0])
