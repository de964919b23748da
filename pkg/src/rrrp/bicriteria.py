"""Bicriteria rendezvous scheduling.

Guess the few most expensive edges of an optimum, solve the residual
instance with the multiplier search and local search, then walk the single
alternating component between the two bracketing schedules from a start
where every running sum of signed subproblem prices is non-positive.  The
result stays within budget, costs at most ``(1 + eps)`` times the optimum
(plus the multiplier-bisection residual) and may put one extra UAV on a
single UGV vertex copy.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lagrangian import BudgetSlack, InfeasibleInstance, LagrangianCertificate, binary_search
from .local_search import MergedGraphComponent, local_search, symmetric_difference
from .model import (BUDGET_SLACK, RendezvousInstance, Schedule, capacity_violations, cost,
                    group_counts, ugv_loads, weight)

GAP_TOL = 1e-9


@dataclass(frozen=True)
class ExchangeSequence:
    component: MergedGraphComponent
    alpha: tuple[float, ...]
    start: int
    z_prime: tuple[int, ...]
    z_dprime: tuple[int, ...]
    gap: float

    def cyclic_prefix_sums(self) -> np.ndarray:
        k = len(self.alpha)
        rolled = np.roll(np.asarray(self.alpha), -self.start)
        return np.cumsum(rolled)[:k]


@dataclass(frozen=True)
class ExchangeOutcome:
    schedule: Schedule
    sequence: ExchangeSequence | None
    dropped: tuple[int, ...] = ()
    rerouted: tuple[tuple[int, int], ...] = ()


def _gasoline_start(alpha: np.ndarray, origin: tuple[int, ...]) -> int:
    k = len(alpha)
    prefix = np.cumsum(alpha)
    start = (int(np.argmax(prefix)) + 1) % k
    # a zero-priced M1 edge can be skipped without breaking any running sum
    for _ in range(k):
        if origin[start] == 1 and alpha[start] <= 0.0:
            start = (start + 1) % k
        else:
            break
    return start


def exchange_step(inst: RendezvousInstance, cert: LagrangianCertificate) -> ExchangeOutcome:
    """Turn an adjacent certificate into one schedule within budget."""
    m1, m2, lam = cert.m1, cert.m2, cert.lam
    if cert.tight or m1 == m2:
        return ExchangeOutcome(m1, None)
    comps = symmetric_difference(m1, m2, inst)
    if len(comps) != 1:
        raise ValueError(f"certificate is not adjacent ({len(comps)} components)")
    comp = comps[0]
    k = len(comp)
    ids = np.asarray(comp.edges)
    price = inst.cost_array[ids] + lam * inst.weight_array[ids]
    alpha = np.asarray(comp.origin, dtype=float) * price
    gap = cert.gap(inst)
    start = _gasoline_start(alpha, comp.origin)
    seq = [comp.edges[(start + h) % k] for h in range(k)]
    org = [comp.origin[(start + h) % k] for h in range(k)]

    budget = inst.budget + BUDGET_SLACK
    running = weight(m1, inst)
    cut = None
    for h, (e, o) in enumerate(zip(seq, org)):
        running += inst.edges[e].weight if o == -1 else -inst.edges[e].weight
        if running > budget:
            cut = h
            break
    if cut is None:
        z_prime = tuple(seq)
        z_dd = list(seq)
    else:
        z_prime = tuple(seq[:cut + 1])
        z_dd = list(seq[:cut])
    # trailing edge must come from M2
    while z_dd and org[len(z_dd) - 1] == 1:
        z_dd.pop()
    sequence = ExchangeSequence(comp, tuple(alpha.tolist()), start, z_prime, tuple(z_dd), gap)
    if len(z_prime) == 1 and cut is not None:
        return ExchangeOutcome(m1, sequence)

    m = m1 ^ z_dd
    dropped = []
    for r, n in sorted(group_counts(m, inst).items()):
        if n > 1:
            mine = sorted((k_ for k_ in m.edges if inst.edge_group[k_] == r),
                          key=lambda k_: (inst.edges[k_].cost, inst.edges[k_].weight, k_))
            for extra in mine[1:]:
                m = m ^ {extra}
                dropped.append(extra)
    m, rerouted = _reroute(inst, m)
    return ExchangeOutcome(m, sequence, tuple(dropped), tuple(rerouted))


def _reroute(inst: RendezvousInstance, m: Schedule):
    """Move one UAV off a doubly used copy onto a free copy.

    Only moves that raise neither weight nor cost are taken, so the budget
    and the cost guarantee of the exchange both survive.
    """
    rerouted = []
    for g, n in sorted(capacity_violations(m, inst).items()):
        loads = ugv_loads(m, inst)
        clash = sorted(k for k in m.edges if inst.edges[k].g == g)
        best = None
        for e in clash:
            ee = inst.edges[e]
            for alt in _edges_from(inst, ee.u):
                ea = inst.edges[alt]
                if alt == e or loads.get(ea.g, 0) > 0:
                    continue
                if ea.weight <= ee.weight and ea.cost <= ee.cost:
                    key = (ea.cost - ee.cost, ea.weight, alt)
                    if best is None or key < best[0]:
                        best = (key, e, alt)
        if best is not None:
            _, e, alt = best
            m = m ^ {e, alt}
            rerouted.append((e, alt))
    return m, rerouted


def _edges_from(inst: RendezvousInstance, u: int) -> list[int]:
    return inst.edges_by_uav.get(u, [])


def feasible_fallback(inst: RendezvousInstance, cert: LagrangianCertificate | BudgetSlack) -> Schedule:
    """The budget-feasible member of the certificate; meets every constraint."""
    if isinstance(cert, BudgetSlack):
        return cert.schedule
    return cert.m1


@dataclass
class PipelineResult:
    schedule: Schedule
    feasible: Schedule
    gap: float
    lam: float
    certificate: LagrangianCertificate | None
    sequence: ExchangeSequence | None


def run_pipeline(inst: RendezvousInstance, dlambda_min: float | None = None) -> PipelineResult:
    """Multiplier search, local search and exchange on one instance."""
    res = binary_search(inst, dlambda_min)
    if isinstance(res, BudgetSlack):
        return PipelineResult(res.schedule, res.schedule, 0.0, 0.0, None, None)
    cert = local_search(inst, res)
    out = exchange_step(inst, cert)
    return PipelineResult(out.schedule, cert.m1, cert.gap(inst), cert.lam, cert, out.sequence)


@dataclass
class BicriteriaResult:
    schedule: Schedule
    cost: float
    weight: float
    budget: float
    gap: float
    guesses: int
    pipelines: int
    violation_count: int
    max_load: int
    used_fallback: bool
    feasible: Schedule
    sequences: list[ExchangeSequence] = field(default_factory=list)
    wall_time_ms: float = 0.0


def _guesses(inst: RendezvousInstance, p: int):
    """Sets of ``p`` edges from distinct UAVs and distinct UGV copies, cheapest first."""
    c = inst.cost_array
    grp = inst.edge_group
    ugv = inst.edge_ugv
    out = []
    for combo in itertools.combinations(range(inst.n_edges), p):
        if len({int(grp[k]) for k in combo}) < p or len({int(ugv[k]) for k in combo}) < p:
            continue
        out.append((float(sum(c[k] for k in combo)), combo))
    out.sort()
    return out


def bicriteria_solve(inst: RendezvousInstance, eps: float = 1.0, dlambda_min: float | None = None,
                     fallback_on_violation: bool = False) -> BicriteriaResult:
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"epsilon must lie in (0, 1], got {eps}")
    t0 = time.perf_counter()
    budget = inst.budget + BUDGET_SLACK
    base = run_pipeline(inst, dlambda_min)  # raises InfeasibleInstance
    best = base.schedule
    best_cost = cost(best, inst)
    gaps = [base.gap]
    sequences = [base.sequence] if base.sequence is not None else []
    p = min(math.ceil(1.0 / eps), inst.n_groups)
    n_guess = 0
    n_pipe = 1
    if base.certificate is not None and p > 0:
        c = inst.cost_array
        a = inst.weight_array
        for c_h, combo in _guesses(inst, p):
            if c_h >= best_cost:
                break
            n_guess += 1
            a_h = float(sum(a[k] for k in combo))
            if a_h > budget:
                continue
            c_floor = min(c[k] for k in combo)
            taken_g = {int(inst.edge_group[k]) for k in combo}
            taken_u = {int(inst.edge_ugv[k]) for k in combo}
            keep_groups = [r for r in range(inst.n_groups) if r not in taken_g]
            keep = np.flatnonzero((c <= c_floor) & ~np.isin(inst.edge_ugv, list(taken_u))
                                  & ~np.isin(inst.edge_group, list(taken_g)))
            rest_budget = inst.budget - a_h
            if not _cheap_feasible(inst, keep, keep_groups, rest_budget):
                continue
            sub, back = inst.restrict(keep.tolist(), keep_groups, rest_budget)
            try:
                res = run_pipeline(sub)
            except InfeasibleInstance:
                continue
            n_pipe += 1
            gaps.append(res.gap)
            if res.sequence is not None:
                sequences.append(res.sequence)
            cand = Schedule.of(list(back[list(res.schedule.edges)]) + list(combo))
            cc = cost(cand, inst)
            if cc < best_cost:
                best, best_cost = cand, cc
    used_fallback = False
    viol = capacity_violations(best, inst)
    if viol and fallback_on_violation:
        best, best_cost, used_fallback = base.feasible, cost(base.feasible, inst), True
        viol = capacity_violations(best, inst)
    loads = ugv_loads(best, inst)
    return BicriteriaResult(best, best_cost, weight(best, inst), inst.budget, max(gaps), n_guess, n_pipe,
                            sum(n - 1 for n in viol.values()), max(loads.values(), default=0),
                            used_fallback, base.feasible, sequences,
                            (time.perf_counter() - t0) * 1e3)


def _cheap_feasible(inst, keep, keep_groups, rest_budget) -> bool:
    if rest_budget < -BUDGET_SLACK:
        return False
    if not keep_groups:
        return True
    grp = inst.edge_group[keep]
    if not np.all(np.isin(keep_groups, grp)):
        return False
    wmin = np.full(inst.n_groups, np.inf)
    np.minimum.at(wmin, grp, inst.weight_array[keep])
    return float(wmin[keep_groups].sum()) <= rest_budget + BUDGET_SLACK
