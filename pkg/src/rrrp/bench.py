"""Runtime and objective comparison of the feasible pipeline against the exact solver.

Two instance families: ``geometric`` instances come from random monitoring
layouts through the instance builder, ``random`` instances from the
abstract generator with uniform costs and weights.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bicriteria import run_pipeline
from .generators import geometric_instance, random_instance
from .lagrangian import InfeasibleInstance
from .model import cost, is_feasible
from .oracle import OracleInfeasible, OracleTooLarge, exact_solve

DEFAULT_SIZES = (20, 40, 80, 160, 500, 2000, 8000, 20000, 60500)
FAMILIES = ("geometric", "random")
BENCH_COLUMNS = ("family", "size", "trial", "seed", "edges", "groups", "binding", "alg_cost", "opt_cost",
                 "gap_pct", "alg_ms", "oracle_ms", "oracle_status")


def shape_for(size: int, family: str = "random") -> dict:
    """Generator arguments giving roughly ``size`` edges.

    Ten UAVs with up to eleven departure vertices each, connected to enough
    rendezvous vertices; small sizes use fewer UAVs so the exact solver
    stays cheap.
    """
    if family == "geometric":
        if size <= 200:
            return dict(n_uav=min(8, max(2, size // 20)), n_ugv=2, max_edges=size)
        # about 60 edges per UAV and road loop in these layouts
        return dict(n_uav=10, n_ugv=max(2, math.ceil(size / 600) + 1), max_edges=size)
    if family != "random":
        raise ValueError(f"unknown family {family!r}")
    n_groups = 10 if size >= 200 else max(2, min(8, size // 5))
    deps = max(1, min(11, size // (n_groups * 4)))
    nodes = max(2, math.ceil((size - n_groups) / (n_groups * deps)))
    return dict(n_groups=n_groups, n_nodes=nodes, deps_per_group=deps, density=1.0, max_edges=size)


@dataclass
class BenchRow:
    family: str
    size: int
    trial: int
    seed: int
    edges: int
    groups: int
    binding: bool
    alg_cost: float
    opt_cost: float | None
    gap_pct: float | None
    alg_ms: float
    oracle_ms: float | None
    oracle_status: str

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in BENCH_COLUMNS}


def gap_percent(alg: float, opt: float) -> float:
    if opt > 0:
        return 100.0 * (alg - opt) / opt
    return 0.0 if alg <= opt + 1e-9 else math.inf


def make_instance(family: str, size: int, seed: int):
    if family == "geometric":
        return geometric_instance(seed, **shape_for(size, family))
    return random_instance(seed, **shape_for(size, family))


def bench_one(size: int, seed: int, trial: int = 0, oracle_max_edges: int = 200,
              node_cap: int = 2_000_000, family: str = "geometric") -> BenchRow:
    """Time the feasible pipeline on one instance and, if small, compare with the optimum.

    ``binding`` is false when the cheapest schedule already meets the budget;
    both solvers then return that schedule and the gap is trivially zero.
    """
    inst = make_instance(family, size, seed)
    binding = True
    t0 = time.perf_counter()
    try:
        res = run_pipeline(inst)
        sched = res.feasible
        alg_cost = cost(sched, inst)
        binding = res.certificate is not None
        assert is_feasible(sched, inst)
    except InfeasibleInstance:
        alg_cost = math.nan
    alg_ms = (time.perf_counter() - t0) * 1e3
    opt = gap = o_ms = None
    status = "skipped"
    if inst.n_edges <= oracle_max_edges:
        t1 = time.perf_counter()
        try:
            opt = cost(exact_solve(inst, node_cap), inst)
            gap = gap_percent(alg_cost, opt)
            status = "ok"
        except OracleTooLarge:
            status = "too-large"
        except OracleInfeasible:
            status = "infeasible"
        o_ms = (time.perf_counter() - t1) * 1e3
    return BenchRow(family, size, trial, seed, inst.n_edges, inst.n_groups, binding, alg_cost, opt, gap, alg_ms, o_ms, status)


def run_bench(sizes: Sequence[int] = DEFAULT_SIZES, trials: int = 20, seed: int = 0,
              oracle_max_edges: int = 200, node_cap: int = 2_000_000, progress=None,
              family: str = "geometric") -> list[BenchRow]:
    rows = []
    for size in sizes:
        for t in range(trials):
            s = int(np.random.SeedSequence([seed, size, t]).generate_state(1)[0])
            row = bench_one(size, s, t, oracle_max_edges, node_cap, family)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def bench_csv(rows: Sequence[BenchRow]) -> str:
    lines = [",".join(BENCH_COLUMNS)]
    for r in rows:
        d = r.as_dict()
        lines.append(",".join(_fmt(d[c]) for c in BENCH_COLUMNS))
    return "\n".join(lines) + "\n"


def runtime_exponent(rows: Sequence[BenchRow]) -> float:
    """Slope of log mean runtime against log edge count (power-law degree)."""
    by = {}
    for r in rows:
        by.setdefault(r.size, []).append(r)
    xs, ys = [], []
    for _, rs in sorted(by.items()):
        xs.append(math.log(np.mean([r.edges for r in rs])))
        ys.append(math.log(max(np.mean([r.alg_ms for r in rs]), 1e-3)))
    if len(xs) < 2:
        return 0.0
    return float(np.polyfit(xs, ys, 1)[0])


def mean_gap(rows: Sequence[BenchRow], binding_only: bool = True) -> float | None:
    """Mean objective gap, by default over instances whose budget binds."""
    g = [r.gap_pct for r in rows
         if r.gap_pct is not None and math.isfinite(r.gap_pct) and (r.binding or not binding_only)]
    return float(np.mean(g)) if g else None
