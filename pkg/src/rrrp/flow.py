"""Lagrangian subproblem as a minimum-cost flow.

The network is source -> one aggregator per UAV -> that UAV's departure
vertices -> UGV vertex copies -> sink, every arc with capacity one and the
rendezvous arcs priced ``c + lam * a``.  Sending one unit per UAV gives a
schedule that meets the one-edge-per-UAV and one-UAV-per-copy constraints.

Arc costs are lexicographic pairs ``(c + lam * a, a)`` so that among equally
priced schedules the solver returns one of least weight.  The algorithm is
successive shortest paths with Dijkstra on reduced costs; each augmentation
costs ``O(|A| log |V|)`` and there are ``N_a`` of them.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .model import Edge, InstanceError, RendezvousInstance, Schedule

ZERO_TOL = 1e-12


class InfeasibleFlow(RuntimeError):
    """The required flow value exceeds the network's max flow."""


@dataclass
class FlowNetwork:
    """Directed network with integer capacities and pair-valued costs.

    ``arc_edge[k]`` links an arc back to the instance edge it represents
    (``-1`` for structural arcs).
    """

    n_nodes: int
    source: int
    sink: int
    demand: int
    tails: list[int] = field(default_factory=list)
    heads: list[int] = field(default_factory=list)
    caps: list[int] = field(default_factory=list)
    costs: list[tuple[float, float]] = field(default_factory=list)
    arc_edge: list[int] = field(default_factory=list)

    def add_arc(self, u: int, v: int, cap: int = 1, cost=(0.0, 0.0), edge: int = -1) -> int:
        if not isinstance(cost, tuple):
            cost = (float(cost), 0.0)
        self.tails.append(u)
        self.heads.append(v)
        self.caps.append(cap)
        self.costs.append(cost)
        self.arc_edge.append(edge)
        return len(self.tails) - 1


def min_cost_flow(net: FlowNetwork) -> tuple[list[int], tuple[float, float]]:
    """Integral min-cost flow of value ``net.demand`` from source to sink.

    Returns per-arc flows and the total (primary, secondary) cost.
    """
    n = net.n_nodes
    m = len(net.tails)
    # residual graph: arc 2k forward, 2k+1 backward
    head = [0] * (2 * m)
    cap = [0] * (2 * m)
    cw = [0.0] * (2 * m)
    ca = [0.0] * (2 * m)
    adj: list[list[int]] = [[] for _ in range(n)]
    for k in range(m):
        u, v = net.tails[k], net.heads[k]
        w, a = net.costs[k]
        head[2 * k], head[2 * k + 1] = v, u
        cap[2 * k] = net.caps[k]
        cw[2 * k], cw[2 * k + 1] = w, -w
        ca[2 * k], ca[2 * k + 1] = a, -a
        adj[u].append(2 * k)
        adj[v].append(2 * k + 1)

    pw, pa = _initial_potentials(n, net, adj, head, cap, cw, ca)
    inf = float("inf")
    flow_left = net.demand
    s, t = net.source, net.sink
    while flow_left > 0:
        dw = [inf] * n
        da = [inf] * n
        pred = [-1] * n
        done = [False] * n
        dw[s] = da[s] = 0.0
        heap = [(0.0, 0.0, s)]
        while heap:
            d1, d2, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            pu_w, pu_a = pw[u], pa[u]
            for arc in adj[u]:
                if cap[arc] <= 0:
                    continue
                v = head[arc]
                if done[v]:
                    continue
                rw = cw[arc] + pu_w - pw[v]
                if -ZERO_TOL < rw < 0.0:
                    rw = 0.0
                nw = d1 + rw
                na = d2 + ca[arc] + pu_a - pa[v]
                if nw < dw[v] or (nw == dw[v] and na < da[v]):
                    dw[v], da[v] = nw, na
                    pred[v] = arc
                    heapq.heappush(heap, (nw, na, v))
        if not done[t]:
            raise InfeasibleFlow(f"only {net.demand - flow_left} of {net.demand} units can be routed")
        for v in range(n):
            if done[v]:
                pw[v] += dw[v]
                pa[v] += da[v]
            else:
                pw[v] += dw[t]
                pa[v] += da[t]
        push = flow_left
        v = t
        while v != s:
            arc = pred[v]
            push = min(push, cap[arc])
            v = head[arc ^ 1]
        v = t
        while v != s:
            arc = pred[v]
            cap[arc] -= push
            cap[arc ^ 1] += push
            v = head[arc ^ 1]
        flow_left -= push

    flows = [cap[2 * k + 1] for k in range(m)]
    tw = sum(f * net.costs[k][0] for k, f in enumerate(flows) if f)
    ta = sum(f * net.costs[k][1] for k, f in enumerate(flows) if f)
    return flows, (tw, ta)


def _initial_potentials(n, net, adj, head, cap, cw, ca):
    pw = [0.0] * n
    pa = [0.0] * n
    if all(c[0] >= 0 for c in net.costs):
        return pw, pa
    # Bellman-Ford from the source for networks with negative arc costs
    inf = float("inf")
    dw = [inf] * n
    da = [inf] * n
    dw[net.source] = da[net.source] = 0.0
    for _ in range(n):
        changed = False
        for u in range(n):
            if dw[u] == inf:
                continue
            for arc in adj[u]:
                if arc & 1 or cap[arc] <= 0:
                    continue
                v = head[arc]
                nw, na = dw[u] + cw[arc], da[u] + ca[arc]
                if nw < dw[v] or (nw == dw[v] and na < da[v]):
                    dw[v], da[v] = nw, na
                    changed = True
        if not changed:
            break
    else:
        raise InfeasibleFlow("negative-cost cycle reachable from the source")
    for v in range(n):
        if dw[v] < inf:
            pw[v], pa[v] = dw[v], da[v]
    return pw, pa


def build_network(inst: RendezvousInstance, lam: float, prune: bool = False) -> FlowNetwork:
    """Flow network for the subproblem at multiplier ``lam``.

    With ``prune`` only the cheapest arc (under ``(c + lam*a, a, edge id)``)
    between a UAV and a given UGV copy is kept: one unit leaves each UAV
    aggregator, so the dominated parallel routes can never be strictly better.
    """
    ng = inst.n_groups
    if prune:
        eids = _undominated_edges(inst, lam)
    else:
        eids = np.arange(inst.n_edges)
    # node layout: 0 source, 1..ng aggregators, UAV vertices, UGV vertices, sink
    uav_ids = sorted({inst.edges[k].u for k in eids} | {v for grp in inst.uav_groups for v in grp})
    uav_node = {v: 1 + ng + i for i, v in enumerate(uav_ids)}
    base = 1 + ng + len(uav_ids)
    ugv_node = {g: base + i for i, g in enumerate(inst.ugv_vertices)}
    sink = base + len(inst.ugv_vertices)
    net = FlowNetwork(sink + 1, 0, sink, ng)
    gv = inst.group_of_vertex
    for r in range(ng):
        net.add_arc(0, 1 + r)
    used_u = {inst.edges[k].u for k in eids}
    for v in uav_ids:
        if v in used_u:
            net.add_arc(1 + gv[v], uav_node[v])
    costs = inst.cost_array[eids] + lam * inst.weight_array[eids]
    for k, w in zip(eids.tolist(), costs.tolist()):
        e = inst.edges[k]
        net.add_arc(uav_node[e.u], ugv_node[e.g], 1, (w, e.weight), k)
    for g in inst.ugv_vertices:
        net.add_arc(ugv_node[g], sink)
    return net


def _undominated_edges(inst: RendezvousInstance, lam: float) -> np.ndarray:
    if inst.n_edges == 0:
        return np.zeros(0, dtype=np.int64)
    w = inst.cost_array + lam * inst.weight_array
    pair = inst.edge_group * (len(inst.ugv_vertices) + 1) + inst.edge_ugv
    ids = np.arange(inst.n_edges)
    order = np.lexsort((ids, inst.weight_array, w, pair))
    sp = pair[order]
    first = np.ones(len(sp), dtype=bool)
    first[1:] = sp[1:] != sp[:-1]
    return np.sort(order[first])


def flow_to_schedule(net: FlowNetwork, flows: list[int]) -> Schedule:
    return Schedule.of(net.arc_edge[k] for k, f in enumerate(flows) if f > 0 and net.arc_edge[k] >= 0)


def solve_lagrangian(inst: RendezvousInstance, lam: float) -> Schedule:
    """Schedule minimising ``c + lam * a`` (ties: least ``a``) under the matching constraints."""
    if lam < 0:
        raise ValueError(f"multiplier must be >= 0, got {lam}")
    if inst.n_groups == 0:
        return Schedule(frozenset())
    net = build_network(inst, lam, prune=True)
    try:
        flows, _ = min_cost_flow(net)
    except InfeasibleFlow as exc:
        raise InstanceError(f"no schedule covers every UAV (missing null edges?): {exc}") from exc
    return flow_to_schedule(net, flows)


def solve_min_weight(inst: RendezvousInstance) -> Schedule:
    """Schedule of least total weight (ties: least cost)."""
    if inst.n_groups == 0:
        return Schedule(frozenset())
    swapped = RendezvousInstance(inst.uav_groups, inst.ugv_vertices,
                                 tuple(_swap(e) for e in inst.edges), 0.0, inst.capacity)
    net = build_network(swapped, 0.0, prune=True)
    try:
        flows, _ = min_cost_flow(net)
    except InfeasibleFlow as exc:
        raise InstanceError(f"no schedule covers every UAV: {exc}") from exc
    return flow_to_schedule(net, flows)


def _swap(e: Edge) -> Edge:
    return Edge(e.u, e.g, e.weight, e.cost)
