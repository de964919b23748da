"""Exact reference solvers and the even/odd partition reduction.

``exact_solve`` is a depth-first branch-and-bound over per-UAV edge choices.
``enumerate_schedules`` lists every schedule meeting the matching constraints
and is only meant for tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .model import BUDGET_SLACK, Edge, RendezvousInstance, Schedule

DEFAULT_NODE_CAP = 10_000_000
TOL = 1e-9


class OracleTooLarge(RuntimeError):
    """The branch-and-bound search exceeded its node cap."""


class OracleInfeasible(RuntimeError):
    """No schedule satisfies the budget."""


def enumerate_schedules(inst: RendezvousInstance, limit: int | None = None) -> Iterator[Schedule]:
    """Yield every schedule with one edge per group and no shared UGV copy."""
    per_group = [list(map(int, inst.group_edges[r])) for r in range(inst.n_groups)]
    edges = inst.edges
    count = 0
    for combo in itertools.product(*per_group):
        gs = [edges[k].g for k in combo]
        if len(set(gs)) != len(gs):
            continue
        count += 1
        if limit is not None and count > limit:
            raise OracleTooLarge(f"more than {limit} schedules")
        yield Schedule.of(combo)


def count_schedules(inst: RendezvousInstance) -> int:
    """Upper bound on the number of matching-feasible schedules (product of group sizes)."""
    return math.prod(len(g) for g in inst.group_edges) if inst.n_groups else 1


def brute_force_lagrangian(inst: RendezvousInstance, lam: float):
    """Lexicographic minimum of ``(c + lam*a, a)`` by enumeration.

    Returns ``(w, a, schedules)`` where ``schedules`` are all schedules that
    attain the minimum exactly.
    """
    best = None
    argbest: list[Schedule] = []
    c = inst.cost_array
    a = inst.weight_array
    for s in enumerate_schedules(inst):
        ids = sorted(s.edges)
        cw = float(sum(c[k] + lam * a[k] for k in ids))
        ca = float(sum(a[k] for k in ids))
        key = (cw, ca)
        if best is None or key < best:
            best, argbest = key, [s]
        elif key == best:
            argbest.append(s)
    return best[0], best[1], argbest


@dataclass
class _Search:
    inst: RendezvousInstance
    order: list[int]
    choices: list[list[int]]
    min_w_suffix: list[float]
    min_c_suffix: list[float]
    node_cap: int
    nodes: int = 0
    best_cost: float = math.inf
    best: tuple[int, ...] | None = None


def exact_solve(inst: RendezvousInstance, node_cap: int = DEFAULT_NODE_CAP) -> Schedule:
    """Globally optimal schedule for the budgeted problem.

    Raises :class:`OracleInfeasible` when no schedule meets the budget and
    :class:`OracleTooLarge` when more than ``node_cap`` search nodes are
    expanded (never returns an unproven answer).
    """
    ng = inst.n_groups
    if ng == 0:
        return Schedule(frozenset())
    c = inst.cost_array
    a = inst.weight_array
    groups = [list(map(int, inst.group_edges[r])) for r in range(ng)]
    if any(not g for g in groups):
        raise OracleInfeasible("some UAV has no edge")
    # groups by descending min-edge weight, edges by ascending cost
    order = sorted(range(ng), key=lambda r: (-min(a[k] for k in groups[r]), r))
    choices = [sorted(groups[r], key=lambda k: (c[k], a[k], k)) for r in order]
    min_w = [min(a[k] for k in ch) for ch in choices]
    min_c = [min(c[k] for k in ch) for ch in choices]
    sw = [0.0] * (ng + 1)
    sc = [0.0] * (ng + 1)
    for i in range(ng - 1, -1, -1):
        sw[i] = sw[i + 1] + min_w[i]
        sc[i] = sc[i + 1] + min_c[i]
    st = _Search(inst, order, choices, sw, sc, node_cap)
    _dfs(st, 0, 0.0, 0.0, [], set())
    if st.best is None:
        raise OracleInfeasible(f"no schedule within budget {inst.budget:.6g} "
                               f"(least possible weight >= {sw[0]:.6g})")
    return Schedule.of(st.best)


def _dfs(st: _Search, depth: int, cur_c: float, cur_w: float, chosen: list[int], used: set[int]):
    st.nodes += 1
    if st.nodes > st.node_cap:
        raise OracleTooLarge(f"branch-and-bound exceeded {st.node_cap} nodes")
    if depth == len(st.choices):
        if cur_c < st.best_cost:
            st.best_cost = cur_c
            st.best = tuple(chosen)
        return
    edges = st.inst.edges
    budget = st.inst.budget + BUDGET_SLACK
    rest_w = st.min_w_suffix[depth + 1]
    rest_c = st.min_c_suffix[depth + 1]
    for k in st.choices[depth]:
        e = edges[k]
        nc = cur_c + e.cost
        if nc + rest_c >= st.best_cost:
            # choices are cost-sorted: nothing later in this list can do better
            break
        nw = cur_w + e.weight
        if nw + rest_w > budget or e.g in used:
            continue
        used.add(e.g)
        chosen.append(k)
        _dfs(st, depth + 1, nc, nw, chosen, used)
        chosen.pop()
        used.discard(e.g)


# -- even/odd partition -----------------------------------------------------

@dataclass(frozen=True)
class PartitionInstance:
    """Positive integers ``z_1..z_2l``; the target is half their sum."""

    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) == 0 or len(self.values) % 2:
            raise ValueError("need a non-empty, even number of values")
        if any(int(z) != z or z <= 0 for z in self.values):
            raise ValueError("values must be positive integers")

    @property
    def target(self) -> float:
        return sum(self.values) / 2

    @property
    def pairs(self) -> int:
        return len(self.values) // 2


def partition_is_yes(p: PartitionInstance) -> bool:
    """Direct check: pick one of each pair ``(z_2j-1, z_2j)`` summing to the target."""
    z = p.values
    total = sum(z)
    if total % 2:
        return False
    target = total // 2
    sums = {0}
    for j in range(p.pairs):
        sums = {s + z[2 * j] for s in sums} | {s + z[2 * j + 1] for s in sums}
    return target in sums


def partition_is_yes_enumerate(p: PartitionInstance) -> bool:
    """Same decision as :func:`partition_is_yes` by listing all ``2**l`` choices."""
    z = p.values
    target = p.target
    for pick in itertools.product((0, 1), repeat=p.pairs):
        if sum(z[2 * j + b] for j, b in enumerate(pick)) == target:
            return True
    return False


def reduce_evenodd(p: PartitionInstance) -> RendezvousInstance:
    """Rendezvous instance whose optimum is <= target iff ``p`` is a YES instance.

    UAV ``j`` gets two edges to private UGV vertices; the edge for ``z_2j``
    costs ``z_2j`` and weighs ``z_2j-1`` and vice versa.  Every UAV also gets
    the mandatory null edge, weighted above the budget so no feasible
    schedule can use it.
    """
    z = p.values
    target = p.target
    ell = p.pairs
    groups = []
    edges = []
    nulls = []
    ugv = []
    copy_map = {}
    for j in range(ell):
        u, u0 = 2 * j, 2 * j + 1
        groups.append((u, u0))
        z_odd, z_even = z[2 * j], z[2 * j + 1]
        g_even, g_odd = 2 * j + 1, 2 * j
        edges.append(Edge(u, g_odd, float(z_odd), float(z_even)))
        edges.append(Edge(u, g_even, float(z_even), float(z_odd)))
        ugv += [g_odd, g_even]
        copy_map[g_odd] = (0, 2 * j, 0)
        copy_map[g_even] = (0, 2 * j + 1, 0)
    for j in range(ell):
        g0 = 2 * ell + j
        ugv.append(g0)
        copy_map[g0] = None
        nulls.append(len(edges))
        edges.append(Edge(2 * j + 1, g0, 0.0, float(target) + 1.0))
    return RendezvousInstance(tuple(groups), tuple(ugv), tuple(edges), float(target), 1,
                              tuple(nulls), copy_map)


def classify_by_oracle(p: PartitionInstance) -> bool:
    inst = reduce_evenodd(p)
    try:
        s = exact_solve(inst)
    except OracleInfeasible:
        return False
    return float(np.sum(inst.cost_array[sorted(s.edges)])) <= p.target + TOL
