import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rrrp.energy import ChargeState, EnergyModel, edge_probability
from rrrp.generators import random_geometry
from rrrp.geometry import (MissionGeometry, Polyline, budget_for, build_instance, candidate_detours,
                           departure_vertices, detour_cost, detour_plans, detour_probabilities,
                           rendezvous_vertices, uav_seed)
from rrrp.model import InstanceError, cost
from rrrp.oracle import OracleInfeasible, exact_solve

V = 9.8


def off_route_geometry(horizon=400.0):
    # single-task tour at the origin; a straight road whose vertices at
    # t = 100 s and t = 200 s both lie 980 m from the task
    x = math.sqrt(980 ** 2 - 225 ** 2)
    return MissionGeometry((Polyline([[0.0, 0.0]]),), (Polyline([[x, -675.0], [x, 5000.0]]),),
                           horizon_s=horizon)


def toy_geometry(horizon=500.0):
    """Two UAVs on a task line 490 m beside a 2 km road, tasks 500 m apart."""
    tasks = [[500.0 * i, 490.0] for i in range(5)]
    return MissionGeometry((Polyline(tasks, cyclic=False), Polyline(tasks, cyclic=False)),
                           (Polyline([[0.0, 0.0], [2000.0, 0.0]], cyclic=False),),
                           horizon_s=horizon, uav_arc=(0.0, 1000.0))


def test_spacing():
    assert toy_geometry().spacing == 450.0


def test_off_route_detour_costs_three_hundred_seconds():
    dets = candidate_detours(off_route_geometry())
    assert len(dets) == 1
    d = dets[0]
    assert d.rendezvous.index == 1
    assert d.to_ugv == pytest.approx(980.0) and d.from_ugv == pytest.approx(980.0)
    assert d.wait == pytest.approx(0.0, abs=1e-9)
    assert d.cost == pytest.approx(300.0)


def test_co_located_detour_costs_the_recharge():
    geom = MissionGeometry((Polyline([[0.0, 0.0], [225.0, 300.0], [0.0, 600.0]]),),
                           (Polyline([[0.0, 0.0], [5000.0, 0.0]]),), horizon_s=300.0)
    dep = departure_vertices(geom, 0)[0]
    rdv = rendezvous_vertices(geom, 0)[0]
    assert detour_cost(dep, rdv, geom) == pytest.approx(100.0)


def test_toy_rendezvous_vertices():
    verts = rendezvous_vertices(toy_geometry(), 0)
    assert [v.index for v in verts] == [0, 1, 2, 3]
    assert [v.point for v in verts] == [(0.0, 0.0), (450.0, 0.0), (900.0, 0.0), (1350.0, 0.0)]
    assert [v.exit_time for v in verts] == [100.0, 200.0, 300.0, 400.0]


def test_toy_departure_vertices():
    geom = toy_geometry()
    a = departure_vertices(geom, 0)
    assert [d.arc for d in a] == [0.0, 500.0, 1000.0, 1500.0, 2000.0]
    assert [d.next_arc for d in a] == [500.0, 1000.0, 1500.0, 2000.0, 2000.0]
    b = departure_vertices(geom, 1)
    assert [d.arc for d in b] == [1000.0, 1500.0, 2000.0]


def _toy_edges_by_hand(geom):
    """Reachability written out directly: arrive by the UGV, back by the horizon."""
    road = [(0.0, 0.0), (450.0, 0.0), (900.0, 0.0), (1350.0, 0.0), (1800.0, 0.0)]
    out = {}
    for r, start in enumerate((0.0, 1000.0)):
        deps = [s for s in (0.0, 500.0, 1000.0, 1500.0, 2000.0) if s >= start]
        for j, s in enumerate(deps):
            t = (s - start) / V
            here, nxt = (s, 490.0), (min(s + 500.0, 2000.0), 490.0)
            for m in range(4):
                arrive = t + math.dist(here, road[m]) / V
                back = (m + 1) * 100.0 + math.dist(road[m + 1], nxt) / V
                if arrive <= m * 100.0 and back <= geom.horizon_s:
                    out[(r, j, m)] = back - t - (nxt[0] - s) / V
    return out


def test_toy_edge_set_matches_hand_reachability():
    geom = toy_geometry()
    got = {(d.uav, d.depart.index, d.rendezvous.index): d.cost for d in candidate_detours(geom)}
    want = _toy_edges_by_hand(geom)
    assert got.keys() == want.keys()
    for k in want:
        assert got[k] == pytest.approx(want[k])
    # spot values: leaving at once for the 450 m vertex takes 67.9 s < 100 s
    assert got[(0, 0, 1)] == pytest.approx(200 + math.hypot(400, 490) / V - 500 / V)
    assert (0, 0, 0) not in got


def test_departures_are_the_current_position_or_task_nodes():
    geom = random_geometry(5, n_uav=3, n_ugv=2)
    for r, tour in enumerate(geom.uav_tours):
        deps = departure_vertices(geom, r)
        assert deps[0].arc == geom.uav_arc[r]
        assert all(tour.is_node(d.arc) for d in deps[1:])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(300, 2500), st.floats(1.0, 1000.0))
def test_longer_horizons_only_add_edges(seed, t_short, extra):
    geom = random_geometry(seed, n_uav=2, n_ugv=2)
    short = MissionGeometry(geom.uav_tours, geom.ugv_tours, horizon_s=t_short, uav_arc=geom.uav_arc,
                            ugv_arc=geom.ugv_arc)
    long = MissionGeometry(geom.uav_tours, geom.ugv_tours, horizon_s=t_short + extra, uav_arc=geom.uav_arc,
                           ugv_arc=geom.ugv_arc)

    def keys(g):
        return {(d.uav, d.depart.arc, d.ugv, d.rendezvous.index) for d in candidate_detours(g)}

    assert keys(short) <= keys(long)


def test_bad_inputs():
    geom = toy_geometry()
    for rho in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            build_instance(geom, EnergyModel(samples=10), rho)
    with pytest.raises(InstanceError):
        MissionGeometry((), (Polyline([[0, 0]]),))
    with pytest.raises(InstanceError):
        Polyline(np.zeros((0, 2)))
    with pytest.raises(InstanceError):
        MissionGeometry((Polyline([[0, 0], [1, 0]]),), (Polyline([[0, 0]]),), uav_speed=0.0)


def test_budget_is_log_inverse():
    assert budget_for(0.9) == pytest.approx(math.log(1 / 0.9))


def _built(seed=3, **kw):
    geom = random_geometry(seed, n_uav=2, n_ugv=2)
    model = EnergyModel(samples=400)
    return geom, model, build_instance(geom, model, 0.9, 1, seed=seed, **kw)


def test_edges_carry_their_detours_and_probabilities():
    geom, model, inst = _built()
    for r in range(inst.n_groups):
        mine = [(k, inst.edge_info[k]) for k in inst.group_edges[r] if inst.edge_info[k] is not None]
        dets = [d for _, d in mine]
        probs, p_null = detour_probabilities(geom, r, dets, model, seed=3)
        for (k, d), p in zip(mine, probs):
            assert math.exp(-inst.edges[k].weight) == pytest.approx(p, rel=1e-12)
            assert inst.edges[k].cost == d.cost
        assert inst.edges[inst.null_edges[r]].prob == pytest.approx(max(p_null, 1e-12), rel=1e-12)


def test_vectorised_probabilities_match_explicit_plans():
    geom, model, inst = _built(seed=8)
    r = 0
    dets = [inst.edge_info[k] for k in inst.group_edges[r] if inst.edge_info[k] is not None][:15]
    probs, _ = detour_probabilities(geom, r, dets, model, seed=8)
    state = ChargeState.from_soc(geom.uav_soc[r], model)
    for d, p in zip(dets, probs):
        before, after = detour_plans(geom, d)
        q = edge_probability(state, before, after, model, seed=uav_seed(8, r))
        assert q == pytest.approx(p, abs=2.5 / model.samples)


def test_booked_windows_take_copies():
    geom = random_geometry(4, n_uav=2, n_ugv=1)
    model = EnergyModel(samples=100)

    def copies(inst):
        out = {}
        for v in inst.ugv_vertices:
            if inst.copy_map[v] is not None:
                idx = inst.copy_map[v][1]
                out[idx] = out.get(idx, 0) + 1
        return out

    free = copies(build_instance(geom, model, 0.9, 2, seed=1))
    held = copies(build_instance(geom, model, 0.9, 2, seed=1, blocked={0: [(150.0, 250.0)]}))
    # vertices 1 and 2 span 100-200 s and 200-300 s; both overlap the booking
    assert free[0] == held[0] == 2
    assert free[1] == 2 and held[1] == 1
    assert free[2] == 2 and held[2] == 1
    assert free[3] == held[3] == 2


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_pruned_instance_has_the_same_optimum(seed):
    geom = random_geometry(seed, n_uav=2, n_ugv=2)
    model = EnergyModel(samples=200)
    full = build_instance(geom, model, 0.9, 1, seed=seed)
    pruned = build_instance(geom, model, 0.9, 1, seed=seed, prune=True)
    assert pruned.n_edges <= full.n_edges
    try:
        opt = cost(exact_solve(full), full)
    except OracleInfeasible:
        with pytest.raises(OracleInfeasible):
            exact_solve(pruned)
        return
    assert cost(exact_solve(pruned), pruned) == pytest.approx(opt)
