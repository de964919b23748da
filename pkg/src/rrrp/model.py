"""Rendezvous instances, schedules and their bookkeeping.

An instance is the bipartite graph between UAV departure vertices (grouped
per UAV) and UGV rendezvous vertex copies.  Every edge carries a detour cost
in seconds and a success probability; the additive weight ``ln(1/p)`` is what
the budget constraint sums.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

BUDGET_SLACK = 1e-9


class InstanceError(ValueError):
    """Raised when an instance violates its structural invariants."""


@dataclass(frozen=True)
class Edge:
    u: int
    g: int
    cost: float
    weight: float

    @property
    def prob(self) -> float:
        return math.exp(-self.weight)

    @classmethod
    def from_prob(cls, u: int, g: int, cost: float, prob: float) -> "Edge":
        if not (0.0 < prob <= 1.0):
            raise InstanceError(f"edge ({u},{g}) probability {prob} outside (0, 1]")
        return cls(u, g, float(cost), -math.log(prob))


@dataclass(frozen=True, eq=False)
class RendezvousInstance:
    """Bipartite rendezvous graph with a log-probability budget.

    ``uav_groups[r]`` holds the departure vertices of UAV ``r`` (its null
    vertex included).  ``ugv_vertices`` lists every UGV vertex copy plus the
    per-UAV null vertices.  ``null_edges[r]`` is the edge id of the
    "no recharge" option of UAV ``r``.  ``copy_map`` sends a UGV vertex id to
    ``(ugv, node index, copy)`` or ``None`` for null vertices.
    """

    uav_groups: tuple[tuple[int, ...], ...]
    ugv_vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    budget: float
    capacity: int = 1
    null_edges: tuple[int, ...] = ()
    copy_map: Mapping[int, tuple[int, int, int] | None] = field(default_factory=dict)
    labels: Mapping[int, object] = field(default_factory=dict)
    edge_info: tuple = ()

    def __post_init__(self):
        if self.budget < 0:
            raise InstanceError(f"budget must be >= 0, got {self.budget}")
        if self.capacity < 1:
            raise InstanceError(f"capacity must be >= 1, got {self.capacity}")
        seen: set[int] = set()
        for grp in self.uav_groups:
            for v in grp:
                if v in seen:
                    raise InstanceError(f"UAV vertex {v} appears in two groups")
                seen.add(v)
        ugv = set(self.ugv_vertices)
        if len(ugv) != len(self.ugv_vertices):
            raise InstanceError("duplicate UGV vertex ids")
        for k, e in enumerate(self.edges):
            if e.u not in seen:
                raise InstanceError(f"edge {k} has unknown UAV vertex {e.u}")
            if e.g not in ugv:
                raise InstanceError(f"edge {k} has unknown UGV vertex {e.g}")
            if e.cost < 0 or e.weight < 0 or not math.isfinite(e.cost) or not math.isfinite(e.weight):
                raise InstanceError(f"edge {k} has invalid cost/weight ({e.cost}, {e.weight})")
        if self.edge_info and len(self.edge_info) != len(self.edges):
            raise InstanceError("edge_info must align with edges")
        if self.null_edges:
            if len(self.null_edges) != len(self.uav_groups):
                raise InstanceError("need exactly one null edge per UAV group")
            for r, k in enumerate(self.null_edges):
                if self.edge_group[k] != r or self.edges[k].cost != 0.0:
                    raise InstanceError(f"null edge {k} of group {r} must belong to it and cost 0")

    # -- cached array views ---------------------------------------------
    @property
    def n_groups(self) -> int:
        return len(self.uav_groups)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def group_of_vertex(self) -> dict[int, int]:
        return {v: r for r, grp in enumerate(self.uav_groups) for v in grp}

    @cached_property
    def ugv_index(self) -> dict[int, int]:
        return {g: i for i, g in enumerate(self.ugv_vertices)}

    @cached_property
    def cost_array(self) -> np.ndarray:
        return np.fromiter((e.cost for e in self.edges), float, self.n_edges)

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.fromiter((e.weight for e in self.edges), float, self.n_edges)

    @cached_property
    def edge_group(self) -> np.ndarray:
        gv = self.group_of_vertex
        return np.fromiter((gv[e.u] for e in self.edges), np.int64, self.n_edges)

    @cached_property
    def edge_ugv(self) -> np.ndarray:
        gi = self.ugv_index
        return np.fromiter((gi[e.g] for e in self.edges), np.int64, self.n_edges)

    @cached_property
    def edges_by_uav(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for k, e in enumerate(self.edges):
            out.setdefault(e.u, []).append(k)
        return out

    @cached_property
    def group_edges(self) -> tuple[np.ndarray, ...]:
        order = np.argsort(self.edge_group, kind="stable")
        bounds = np.searchsorted(self.edge_group[order], np.arange(self.n_groups + 1))
        return tuple(order[bounds[r]:bounds[r + 1]] for r in range(self.n_groups))

    @property
    def c_max(self) -> float:
        return float(self.cost_array.max()) if self.n_edges else 0.0

    def null_schedule(self) -> "Schedule":
        if not self.null_edges:
            raise InstanceError("instance has no null edges")
        return Schedule(frozenset(self.null_edges))

    def with_budget(self, budget: float) -> "RendezvousInstance":
        return RendezvousInstance(self.uav_groups, self.ugv_vertices, self.edges, budget,
                                  self.capacity, self.null_edges, self.copy_map, self.labels,
                                  self.edge_info)

    def restrict(self, keep_edges: Iterable[int], keep_groups: Sequence[int], budget: float):
        """Sub-instance on a subset of groups and edges.

        Returns the sub-instance and the array mapping its edge ids back to
        ids of ``self``.
        """
        keep_groups = list(keep_groups)
        gset = set(keep_groups)
        kept = [k for k in sorted(set(keep_edges)) if self.edge_group[k] in gset]
        edges = tuple(self.edges[k] for k in kept)
        new_id = {k: i for i, k in enumerate(kept)}
        used_u = {e.u for e in edges}
        groups = tuple(tuple(v for v in self.uav_groups[r] if v in used_u) for r in keep_groups)
        ugv_used = {e.g for e in edges}
        ugv = tuple(g for g in self.ugv_vertices if g in ugv_used)
        nulls: tuple[int, ...] = ()
        if self.null_edges and all(self.null_edges[r] in new_id for r in keep_groups):
            nulls = tuple(new_id[self.null_edges[r]] for r in keep_groups)
        info = tuple(self.edge_info[k] for k in kept) if self.edge_info else ()
        sub = RendezvousInstance(groups, ugv, edges, max(budget, 0.0), self.capacity, nulls,
                                 {g: self.copy_map.get(g) for g in ugv} if self.copy_map else {},
                                 {v: self.labels[v] for grp in groups for v in grp if v in self.labels},
                                 info)
        return sub, np.asarray(kept, dtype=np.int64)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "uav_groups": [list(g) for g in self.uav_groups],
            "ugv_vertices": list(self.ugv_vertices),
            "edges": [{"u": e.u, "g": e.g, "cost": e.cost, "prob": e.prob} for e in self.edges],
            "budget": self.budget,
            "capacity": self.capacity,
            "null_edges": list(self.null_edges),
            "copy_map": {str(g): (list(v) if v is not None else None) for g, v in self.copy_map.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RendezvousInstance":
        try:
            edges = tuple(Edge.from_prob(int(e["u"]), int(e["g"]), float(e["cost"]), float(e["prob"]))
                          for e in doc["edges"])
            groups = tuple(tuple(int(v) for v in g) for g in doc["uav_groups"])
            ugv = tuple(int(g) for g in doc["ugv_vertices"])
            budget = float(doc["budget"])
            capacity = int(doc.get("capacity", 1))
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance document: {exc!r}") from exc
        nulls = tuple(int(k) for k in doc.get("null_edges", ()))
        if not nulls:
            nulls = _infer_null_edges(groups, edges)
        copy_map = {int(g): (tuple(v) if v is not None else None)
                    for g, v in doc.get("copy_map", {}).items()}
        return cls(groups, ugv, edges, budget, capacity, nulls, copy_map)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "RendezvousInstance":
        return cls.from_dict(json.loads(text))


def prune_dominated(inst: RendezvousInstance):
    """Drop edges no optimum needs, at any multiplier.

    An edge of UAV ``r`` goes when another edge of ``r`` on the same UGV
    copy is at least as good in cost and weight, or when ``N_a`` such edges
    sit on pairwise distinct copies: in a schedule using it, the other UAVs
    block at most ``N_a - 1`` copies, so one of them is free for the swap.
    "At least as good" breaks exact ties by edge id, which keeps the swap
    argument acyclic.  Null edges always stay.  Returns the pruned instance
    and the map back to original edge ids.
    """
    c, a, ugv = inst.cost_array, inst.weight_array, inst.edge_ugv
    nulls = set(inst.null_edges)
    n_a = inst.n_groups
    keep = []
    for ids in inst.group_edges:
        order = ids[np.lexsort((ids, a[ids], c[ids]))]
        aa = a[order]
        for pos, k in enumerate(order):
            if k in nulls or pos == 0:
                keep.append(int(k))
                continue
            dom = order[:pos][aa[:pos] <= aa[pos]]
            copies = ugv[dom]
            if np.any(copies == ugv[k]) or len(np.unique(copies)) >= n_a:
                continue
            keep.append(int(k))
    return inst.restrict(keep, range(n_a), inst.budget)


def _infer_null_edges(groups, edges) -> tuple[int, ...]:
    # a null vertex pair is recognisable as the unique zero-cost edge whose
    # UGV vertex has no other incident edge
    deg = Counter(e.g for e in edges)
    gv = {v: r for r, grp in enumerate(groups) for v in grp}
    found: dict[int, int] = {}
    for k, e in enumerate(edges):
        if e.cost == 0.0 and deg[e.g] == 1:
            found.setdefault(gv[e.u], k)
    if len(found) != len(groups):
        return ()
    return tuple(found[r] for r in range(len(groups)))


@dataclass(frozen=True)
class Schedule:
    """A set of chosen edge ids, ideally one per UAV group."""

    edges: frozenset[int]

    def __iter__(self):
        return iter(sorted(self.edges))

    def __len__(self):
        return len(self.edges)

    def __xor__(self, other) -> "Schedule":
        other_edges = other.edges if isinstance(other, Schedule) else frozenset(other)
        return Schedule(self.edges ^ other_edges)

    @classmethod
    def of(cls, ids: Iterable[int]) -> "Schedule":
        return cls(frozenset(int(k) for k in ids))


def cost(schedule: Schedule, inst: RendezvousInstance) -> float:
    _check_ids(schedule, inst)
    return float(sum(inst.edges[k].cost for k in sorted(schedule.edges)))


def weight(schedule: Schedule, inst: RendezvousInstance) -> float:
    _check_ids(schedule, inst)
    return float(sum(inst.edges[k].weight for k in sorted(schedule.edges)))


def lagrangian_value(schedule: Schedule, inst: RendezvousInstance, lam: float) -> float:
    return cost(schedule, inst) + lam * weight(schedule, inst)


def success_probability(schedule: Schedule, inst: RendezvousInstance) -> float:
    _check_ids(schedule, inst)
    return float(np.prod([inst.edges[k].prob for k in schedule.edges]))


def _check_ids(schedule: Schedule, inst: RendezvousInstance):
    for k in schedule.edges:
        if not 0 <= k < inst.n_edges:
            raise InstanceError(f"schedule references unknown edge id {k}")


def group_counts(schedule: Schedule, inst: RendezvousInstance) -> Counter:
    _check_ids(schedule, inst)
    return Counter(int(inst.edge_group[k]) for k in schedule.edges)


def ugv_loads(schedule: Schedule, inst: RendezvousInstance) -> Counter:
    """Multiplicity of every UGV vertex copy used by the schedule."""
    _check_ids(schedule, inst)
    return Counter(inst.edges[k].g for k in schedule.edges)


def capacity_violations(schedule: Schedule, inst: RendezvousInstance) -> dict[int, int]:
    return {g: n for g, n in ugv_loads(schedule, inst).items() if n > 1}


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self):
        return self.ok


def is_feasible(schedule: Schedule, inst: RendezvousInstance, slack: float = BUDGET_SLACK) -> FeasibilityReport:
    msgs = []
    counts = group_counts(schedule, inst)
    for r in range(inst.n_groups):
        if counts.get(r, 0) != 1:
            msgs.append(f"group {r} has {counts.get(r, 0)} edges")
    for g, n in sorted(capacity_violations(schedule, inst).items()):
        msgs.append(f"UGV vertex {g} used {n} times")
    a = weight(schedule, inst)
    if a > inst.budget + slack:
        msgs.append(f"weight {a:.6g} exceeds budget {inst.budget:.6g}")
    return FeasibilityReport(not msgs, tuple(msgs))


def satisfies_matching(schedule: Schedule, inst: RendezvousInstance) -> bool:
    """One edge per group and no UGV copy used twice."""
    counts = group_counts(schedule, inst)
    return (all(counts.get(r, 0) == 1 for r in range(inst.n_groups))
            and not capacity_violations(schedule, inst))
