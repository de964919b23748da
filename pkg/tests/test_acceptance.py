"""End-to-end acceptance checks; each test reports one PASS/FAIL line."""

import math
import os
import time

import numpy as np
import pytest

from rrrp.bench import mean_gap, run_bench, runtime_exponent
from rrrp.bicriteria import GAP_TOL, bicriteria_solve, run_pipeline
from rrrp.cli import threads_cap
from rrrp.energy import ChargeState, EnergyModel, Leg, power_draw, survival_probability
from rrrp.flow import solve_lagrangian
from rrrp.generators import random_instance
from rrrp.lagrangian import BudgetSlack, InfeasibleInstance, binary_search
from rrrp.local_search import is_adjacent, local_search, symmetric_difference
from rrrp.model import (Edge, RendezvousInstance, Schedule, cost, is_feasible, ugv_loads, weight)
from rrrp.oracle import (PartitionInstance, OracleInfeasible, classify_by_oracle, count_schedules,
                         enumerate_schedules, exact_solve, partition_is_yes_enumerate)
from rrrp.scenario import default_scenario
from rrrp.sim import GreedyThreshold, RRRPPolicy, prob_mean_ge, run_study


def report(lines, number, ok, detail):
    line = f"CRITERION {number} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    lines.append(line)
    return ok


# -- shared desk-scale corpus (criteria 1, 2 and 6) ------------------------

def desk_instance(i):
    rng = np.random.default_rng([7, i])
    return random_instance(rng, n_groups=int(rng.integers(1, 9)), n_nodes=int(rng.integers(2, 6)),
                           deps_per_group=int(rng.integers(1, 4)), density=float(rng.uniform(0.3, 1.0)),
                           capacity=1, max_edges=40)


@pytest.fixture(scope="module")
def desk_runs():
    t0 = time.perf_counter()
    runs = []
    for i in range(200):
        inst = desk_instance(i)
        try:
            opt = cost(exact_solve(inst), inst)
        except OracleInfeasible:
            opt = None
        bic = {}
        pipe = None
        if opt is not None:
            bic = {eps: bicriteria_solve(inst, eps) for eps in (0.5, 1.0)}
            pipe = run_pipeline(inst)
        runs.append((inst, opt, bic, pipe))
    return runs, time.perf_counter() - t0


def test_criterion_1_bicriteria_matches_oracle(desk_runs, acceptance_report):
    runs, elapsed = desk_runs
    solved = bad_cost = bad_load = 0
    worst = 0.0
    for inst, opt, bic, _ in runs:
        assert inst.n_groups <= 8 and inst.n_edges <= 40 and inst.capacity == 1
        if opt is None:
            continue
        for eps, res in bic.items():
            solved += 1
            bound = (1 + eps) * opt + res.gap
            if res.cost > bound + 1e-9 * max(1.0, bound):
                bad_cost += 1
            worst = max(worst, res.cost / opt if opt > 0 else 1.0)
            loads = ugv_loads(res.schedule, inst)
            if max(loads.values(), default=0) > 2 or sum(1 for n in loads.values() if n == 2) > 1:
                bad_load += 1
            assert res.weight <= inst.budget + 1e-9
    ok = solved == 400 and bad_cost == 0 and bad_load == 0 and elapsed < 120
    report(acceptance_report, 1, ok,
           f"{solved} solves, {bad_cost} cost-bound and {bad_load} load violations, "
           f"worst cost ratio {worst:.3f}, {elapsed:.1f}s incl. oracle")
    assert ok


def test_criterion_2_local_search_is_feasible(desk_runs, acceptance_report):
    runs, _ = desk_runs
    checked = infeasible = over = 0
    for inst, opt, _, pipe in runs:
        if opt is None:
            continue
        checked += 1
        m1 = pipe.feasible
        if not is_feasible(m1, inst):
            infeasible += 1
        bound = opt + pipe.lam * inst.budget
        if cost(m1, inst) > bound + 1e-6 * max(1.0, abs(bound)):
            over += 1
    ok = checked == 200 and infeasible == 0 and over == 0
    report(acceptance_report, 2, ok,
           f"{checked} instances, {infeasible} infeasible M1, {over} above opt + lambda*B")
    assert ok


def test_criterion_3_subproblem_exactness(acceptance_report):
    # integer costs, dyadic weights and dyadic multipliers keep every sum exact
    lams = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 32.0]
    instances = mismatches = 0
    seed = 0
    while instances < 500:
        rng = np.random.default_rng([3, seed])
        seed += 1
        inst = random_instance(rng, n_groups=int(rng.integers(1, 5)), n_nodes=int(rng.integers(1, 5)),
                               deps_per_group=int(rng.integers(1, 3)), density=float(rng.uniform(0.3, 1.0)),
                               grid=True)
        if count_schedules(inst) > 10_000:
            continue
        instances += 1
        c, a = inst.cost_array, inst.weight_array
        scheds = list(enumerate_schedules(inst))
        sums = np.array([[c[list(s.edges)].sum(), a[list(s.edges)].sum()] for s in scheds])
        for lam in lams:
            w = sums[:, 0] + lam * sums[:, 1]
            keys = sorted(zip(w, sums[:, 1]))
            best = keys[0]
            x = solve_lagrangian(inst, lam)
            got = (cost(x, inst) + lam * weight(x, inst), weight(x, inst))
            if got != (float(best[0]), float(best[1])):
                mismatches += 1
    ok = mismatches == 0
    report(acceptance_report, 3, ok, f"{instances} instances x {len(lams)} multipliers, {mismatches} mismatches")
    assert ok


def test_criterion_4_lambda_monotonicity(acceptance_report):
    lams = np.concatenate([[0.0], np.geomspace(1 / 64, 512, 19)])
    violations = 0
    for i in range(100):
        rng = np.random.default_rng([4, i])
        inst = random_instance(rng, n_groups=int(rng.integers(1, 7)), n_nodes=int(rng.integers(1, 6)),
                               deps_per_group=int(rng.integers(1, 4)), density=float(rng.uniform(0.3, 1.0)),
                               grid=True)
        prev = None
        for lam in lams:
            x = solve_lagrangian(inst, float(lam))
            cur = (cost(x, inst), weight(x, inst))
            if prev is not None and (cur[1] > prev[1] or cur[0] < prev[0]):
                violations += 1
            prev = cur
    ok = violations == 0
    report(acceptance_report, 4, ok, f"100 instances x {len(lams)} multipliers, {violations} violations")
    assert ok


def with_private_uav(inst: RendezvousInstance):
    """Append a UAV with two private UGV vertices; returns the instance and both detour edge ids."""
    u = 1 + max(max(g) for g in inst.uav_groups)
    g = 1 + max(inst.ugv_vertices)
    n = inst.n_edges
    edges = inst.edges + (Edge(u, g, 1.0, 0.0), Edge(u, g + 1, 2.0, 0.0), Edge(u + 1, g + 2, 0.0, 0.0))
    copy_map = {**inst.copy_map, g: (10_000, 0, 0), g + 1: (10_000, 1, 0), g + 2: None}
    ext = RendezvousInstance(inst.uav_groups + ((u, u + 1),), inst.ugv_vertices + (g, g + 1, g + 2), edges,
                             inst.budget, inst.capacity, inst.null_edges + (n + 2,), copy_map)
    return ext, n, n + 1


def test_criterion_5_adjacency_both_directions(acceptance_report):
    certified = single = tight = caught = 0
    for i in range(300):
        rng = np.random.default_rng([5, i])
        inst = random_instance(rng, n_groups=int(rng.integers(2, 7)), n_nodes=int(rng.integers(2, 6)),
                               deps_per_group=int(rng.integers(1, 4)), density=float(rng.uniform(0.3, 1.0)))
        try:
            cert = binary_search(inst)
        except InfeasibleInstance:
            continue
        if isinstance(cert, BudgetSlack):
            continue
        out = local_search(inst, cert)
        certified += 1
        if out.tight:
            tight += 1  # a single budget-hitting optimum, nothing to exchange
            single += 1
            continue
        if len(symmetric_difference(out.m1, out.m2, inst)) == 1:
            single += 1
        ext, e1, e2 = with_private_uav(inst)
        m1 = Schedule.of(list(out.m1.edges) + [e1])
        m2 = Schedule.of(list(out.m2.edges) + [e2])
        if len(symmetric_difference(m1, m2, ext)) == 2 and not is_adjacent(m1, m2, ext):
            caught += 1
    untight = certified - tight
    ok = certified >= 100 and single == certified and caught == untight
    report(acceptance_report, 5, ok,
           f"{single}/{certified} certificates adjacent ({tight} tight), "
           f"injected second component detected {caught}/{untight}")
    assert ok


def test_criterion_6_gasoline_inequality(desk_runs, acceptance_report):
    runs, _ = desk_runs
    calls = bad = 0
    for _, opt, bic, pipe in runs:
        if opt is None:
            continue
        seqs = [s for res in bic.values() for s in res.sequences]
        if pipe.sequence is not None:
            seqs.append(pipe.sequence)
        for seq in seqs:
            calls += 1
            if np.any(seq.cyclic_prefix_sums() > seq.gap + GAP_TOL):
                bad += 1
    ok = calls > 0 and bad == 0
    report(acceptance_report, 6, ok, f"{calls} exchange sequences, {bad} with a positive cyclic prefix sum")
    assert ok


def test_criterion_7_hardness_reduction(acceptance_report):
    rng = np.random.default_rng(2024)
    agree = yes = 0
    for _ in range(100):
        ell = int(rng.integers(1, 11))
        p = PartitionInstance(tuple(int(v) for v in rng.integers(1, 21, 2 * ell)))
        direct = partition_is_yes_enumerate(p)
        yes += direct
        agree += classify_by_oracle(p) == direct
    ok = agree == 100
    report(acceptance_report, 7, ok, f"{agree}/100 classifications agree ({yes} YES, {100 - yes} NO)")
    assert ok


def test_criterion_8_energy_model(acceptance_report):
    hover = float(power_draw(0.0, 2.3))
    cruise = float(power_draw(9.8, 2.3))
    values_ok = round(hover, 2) == 158.48 and abs(cruise - 131.45) <= 0.01

    model = EnergyModel(samples=4000)
    rng = np.random.default_rng(8)
    monotone_bad = 0
    for trial in range(50):
        legs = [Leg(float(rng.uniform(0, 6000)), float(rng.choice([0.0, 9.8, 12.0])), float(rng.uniform(0, 360)),
                    float(rng.uniform(0, 300))) for _ in range(8)]
        state = ChargeState.from_soc(float(rng.uniform(0.2, 1.0)), model)
        probs = [survival_probability(state, legs[:k], model, seed=trial) for k in range(len(legs) + 1)]
        monotone_bad += sum(1 for p, q in zip(probs, probs[1:]) if q > p)

    plan = [Leg(12000, 9.8, 10.0), Leg.wait(300), Leg(6000, 9.8, 200.0)]
    state = ChargeState.from_soc(0.83, model)
    by_threads = {t: survival_probability(state, plan, model, seed=5, threads=t) for t in (1, 2, 3, 4, 8)}
    deterministic = len(set(by_threads.values())) == 1

    ok = values_ok and monotone_bad == 0 and deterministic
    report(acceptance_report, 8, ok,
           f"P(0)={hover:.2f} W, P(9.8)={cruise:.2f} W, {monotone_bad} monotonicity breaks over 50 plans, "
           f"thread counts 1-8 give {sorted(set(by_threads.values()))}")
    assert ok


@pytest.mark.slow
def test_criterion_9_simulation_trends(acceptance_report):
    sc = default_scenario()
    workers = max(1, min(os.cpu_count() or 1, threads_cap() or os.cpu_count() or 1))
    rhos = [0.01, 0.1, 0.3]
    greedy = [GreedyThreshold(f) for f in (0.3, 0.4, 0.5)]
    t0 = time.perf_counter()
    rows = run_study(sc, [RRRPPolicy()] + greedy, rhos=rhos, n_trials=20, seed=0, workers=workers)
    elapsed = time.perf_counter() - t0
    ttff = {}
    for r in rows:
        ttff.setdefault((r.policy, r.rho), []).append(r.metrics.ttff_s)
    rr = {rho: ttff[("rrrp", rho)] for rho in rhos}
    trend = [prob_mean_ge(rr[0.01], rr[0.1]), prob_mean_ge(rr[0.1], rr[0.3])]
    versus = {g.name: prob_mean_ge(rr[0.1], ttff[(g.name, None)]) for g in greedy}
    means = {k: float(np.mean(v)) for k, v in ttff.items()}
    ok = min(trend) >= 0.9 and min(versus.values()) >= 0.9 and elapsed < 900
    detail = ", ".join(f"{p}{'' if rho is None else f'@{rho:g}'}={m:.0f}s" for (p, rho), m in means.items())
    report(acceptance_report, 9, ok,
           f"mean ttff {detail}; P(trend)={trend[0]:.2f},{trend[1]:.2f}; "
           f"P(rrrp>=greedy)={','.join(f'{v:.2f}' for v in versus.values())}; {elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_10_scalability(acceptance_report):
    small = run_bench([20, 40, 80, 160], trials=20, seed=0, family="geometric")
    small_random = run_bench([20, 40, 80, 160], trials=20, seed=0, family="random")
    large = run_bench([500, 2000, 8000, 20000, 60500], trials=3, seed=0, family="geometric")
    large_random = run_bench([500, 2000, 8000, 20000, 60500], trials=3, seed=0, family="random")

    gaps = {"geometric": mean_gap(small), "random": mean_gap(small_random)}
    exps = {"geometric": runtime_exponent(large), "random": runtime_exponent(large_random)}
    slowest = max(r.alg_ms for r in large + large_random) / 1e3
    biggest = max(r.edges for r in large + large_random)
    # polynomial growth of bounded degree; exponential growth would blow past any fixed slope
    runtime_ok = all(e < 3.0 for e in exps.values()) and slowest < 60 and biggest >= 55_000
    gap_ok = all(g is not None and g < 20.0 for g in gaps.values())
    over = [f"{k} {g:.1f}%" for k, g in gaps.items() if g is not None and g > 15.0]
    ok = runtime_ok and gap_ok
    note = f"; above 15% but within the 5-point allowance: {', '.join(over)}" if over and ok else ""
    report(acceptance_report, 10, ok,
           f"mean gap on binding small instances: geometric {gaps['geometric']:.1f}%, random "
           f"{gaps['random']:.1f}%; runtime log-log slope geometric {exps['geometric']:.2f}, random "
           f"{exps['random']:.2f}; largest {biggest} edges; slowest {slowest:.1f}s{note}")
    assert ok
