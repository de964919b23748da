"""Reduce a bracketing pair of schedules to adjacent extreme points.

Components live in the merged graph where all departure vertices of one UAV
collapse into a single node; two schedules are adjacent exactly when their
symmetric difference is a single path or cycle there.
"""

from __future__ import annotations

import dataclasses
from collections import defaultdict
from dataclasses import dataclass

from .lagrangian import LagrangianCertificate
from .model import BUDGET_SLACK, RendezvousInstance, Schedule, weight


@dataclass(frozen=True)
class MergedGraphComponent:
    """Ordered edges of one path or cycle; ``origin[i]`` is +1 for M1, -1 for M2."""

    edges: tuple[int, ...]
    origin: tuple[int, ...]
    is_cycle: bool

    def __len__(self):
        return len(self.edges)

    @property
    def edge_set(self) -> frozenset[int]:
        return frozenset(self.edges)


def _ends(inst: RendezvousInstance, k: int):
    return ("r", int(inst.edge_group[k])), ("g", int(inst.edge_ugv[k]))


def symmetric_difference(m1: Schedule, m2: Schedule, inst: RendezvousInstance) -> list[MergedGraphComponent]:
    diff = sorted(m1.edges ^ m2.edges)
    if not diff:
        return []
    incident: dict[tuple, list[int]] = defaultdict(list)
    for k in diff:
        for node in _ends(inst, k):
            incident[node].append(k)
    for node, ks in incident.items():
        if len(ks) > 2:
            raise ValueError(f"merged node {node} has degree {len(ks)}; inputs are not valid schedules")
    seen: set[int] = set()
    comps = []
    for k0 in diff:
        if k0 in seen:
            continue
        # collect the component
        stack, members = [k0], set()
        while stack:
            k = stack.pop()
            if k in members:
                continue
            members.add(k)
            for node in _ends(inst, k):
                stack.extend(x for x in incident[node] if x not in members)
        seen |= members
        endpoints = [n for n in {nd for k in members for nd in _ends(inst, k)} if len(incident[n]) == 1]
        is_cycle = not endpoints
        if is_cycle:
            start_edge = min(members)
            a, b = _ends(inst, start_edge)
            node = b  # leave through the UGV side first
        else:
            start_node = min(endpoints, key=lambda n: incident[n][0])
            start_edge = incident[start_node][0]
            a, b = _ends(inst, start_edge)
            node = b if a == start_node else a
        order = [start_edge]
        used = {start_edge}
        while True:
            nxt = [x for x in incident[node] if x not in used]
            if not nxt:
                break
            k = nxt[0]
            order.append(k)
            used.add(k)
            a, b = _ends(inst, k)
            node = b if a == node else a
        origin = tuple(1 if k in m1.edges else -1 for k in order)
        comps.append(MergedGraphComponent(tuple(order), origin, is_cycle))
    comps.sort(key=lambda c: min(c.edges))
    return comps


def is_adjacent(m1: Schedule, m2: Schedule, inst: RendezvousInstance) -> bool:
    return len(symmetric_difference(m1, m2, inst)) == 1


def local_search(inst: RendezvousInstance, cert: LagrangianCertificate) -> LagrangianCertificate:
    budget = inst.budget + BUDGET_SLACK
    m1, m2 = cert.m1, cert.m2
    if weight(m1, inst) > budget or weight(m2, inst) < inst.budget - BUDGET_SLACK:
        raise ValueError("certificate must satisfy a(M1) <= B <= a(M2)")
    if cert.tight or m1 == m2:
        return cert
    steps = 0
    comps = symmetric_difference(m1, m2, inst)
    while len(comps) > 1:
        y = comps[0].edge_set
        n = m1 ^ y
        if weight(n, inst) <= budget:
            m1 = n
        else:
            m2 = n
        steps += 1
        comps = symmetric_difference(m1, m2, inst)
    return dataclasses.replace(cert, m1=m1, m2=m2, absorptions=cert.absorptions + steps)
