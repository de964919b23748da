"""Seeded random rendezvous instances for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .model import Edge, RendezvousInstance


def random_instance(rng: np.random.Generator | int, n_groups: int = 4, n_nodes: int = 4,
                    deps_per_group: int = 2, density: float = 0.5, capacity: int = 1,
                    grid: bool = False, max_edges: int | None = None,
                    budget_frac: float | None = None) -> RendezvousInstance:
    """Random instance with a binding budget.

    Detour edges trade cost for weight against the null edge of their UAV.
    With ``grid`` costs are integers and weights multiples of 1/8, so sums and
    dyadic multipliers are exact in floating point.
    ``max_edges`` caps the total edge count (null edges included).
    """
    rng = np.random.default_rng(rng)
    groups = []
    edges: list[Edge] = []
    nulls = []
    ugv = []
    copy_map = {}
    vid = 0
    for node in range(n_nodes):
        for cp in range(capacity):
            g = node * capacity + cp
            ugv.append(g)
            copy_map[g] = (0, node, cp)
    gnull = n_nodes * capacity
    detours = []
    for r in range(n_groups):
        deps = list(range(vid, vid + deps_per_group))
        null_v = vid + deps_per_group
        vid = null_v + 1
        groups.append(tuple(deps) + (null_v,))
        ugv.append(gnull + r)
        copy_map[gnull + r] = None
        if grid:
            null_w = rng.integers(8, 25) / 8.0
        else:
            null_w = float(rng.uniform(1.0, 3.0))
        nulls.append((null_v, gnull + r, null_w))
        for u in deps:
            for node in range(n_nodes):
                if rng.random() >= density:
                    continue
                if grid:
                    c = float(rng.integers(1, 21))
                    a = rng.integers(1, 17) / 8.0
                else:
                    c = float(rng.uniform(1.0, 100.0))
                    a = float(rng.uniform(0.01, 2.0))
                detours.append((u, node, c, a))
    if max_edges is not None:
        room = max(0, (max_edges - n_groups) // capacity)
        if len(detours) > room:
            pick = np.sort(rng.choice(len(detours), size=room, replace=False))
            detours = [detours[i] for i in pick]
    for r, (u, g, w) in enumerate(nulls):
        nulls[r] = len(edges)
        edges.append(Edge(u, g, 0.0, w))
    for u, node, c, a in detours:
        for cp in range(capacity):
            edges.append(Edge(u, node * capacity + cp, c, a))
    inst = RendezvousInstance(tuple(groups), tuple(ugv), tuple(edges), 0.0, capacity, tuple(nulls), copy_map)
    return inst.with_budget(_pick_budget(inst, rng, grid, budget_frac))


def _pick_budget(inst, rng, grid, frac):
    from .flow import solve_lagrangian, solve_min_weight
    from .model import weight
    lo = weight(solve_min_weight(inst), inst)
    hi = weight(solve_lagrangian(inst, 0.0), inst)
    if frac is None:
        frac = float(rng.uniform(0.1, 0.9))
    b = lo + frac * (hi - lo)
    if grid:
        b = np.floor(b * 8.0) / 8.0 + 1 / 16
    return float(max(b, lo))


def random_geometry(rng: np.random.Generator | int, n_uav: int = 2, n_ugv: int = 2, extent: float = 6000.0,
                    soc_range: tuple[float, float] = (0.3, 0.9)):
    """Random monitoring layout with every vehicle caught mid-mission.

    UAV tours are ten-node ellipses and UGV roads are rectangles, all placed
    inside an ``extent`` square.  Positions and charge levels are uniform.
    """
    from .geometry import MissionGeometry, Polyline

    rng = np.random.default_rng(rng)
    uav, ugv = [], []
    for _ in range(n_uav):
        cx, cy = rng.uniform(0, extent, 2)
        rx, ry = rng.uniform(800, 2500, 2)
        ang = rng.uniform(0, 2 * np.pi) + 2 * np.pi * np.arange(10) / 10
        uav.append(Polyline(np.column_stack([cx + rx * np.cos(ang), cy + ry * np.sin(ang)])))
    for _ in range(n_ugv):
        x0, y0 = rng.uniform(0, extent, 2)
        w, h = rng.uniform(1500, 5000, 2)
        ugv.append(Polyline(np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]])))
    return MissionGeometry(tuple(uav), tuple(ugv),
                           uav_arc=tuple(float(rng.uniform(0, t.length)) for t in uav),
                           ugv_arc=tuple(float(rng.uniform(0, t.length)) for t in ugv),
                           uav_soc=tuple(float(x) for x in rng.uniform(*soc_range, n_uav)))


def geometric_instance(rng: np.random.Generator | int, n_uav: int = 2, n_ugv: int = 2,
                       success: float = 0.9, max_edges: int | None = None, samples: int = 500,
                       extent: float = 6000.0) -> RendezvousInstance:
    """Rendezvous instance built from :func:`random_geometry`.

    ``max_edges`` keeps a uniform random subset of detour edges (null edges
    always survive).  Probabilities use ``samples`` Monte Carlo draws.
    """
    from .energy import EnergyModel
    from .geometry import build_instance

    rng = np.random.default_rng(rng)
    geom = random_geometry(rng, n_uav, n_ugv, extent)
    inst = build_instance(geom, EnergyModel(samples=samples), success, 1,
                          seed=int(rng.integers(2**31)))
    if max_edges is None or inst.n_edges <= max_edges:
        return inst
    nulls = set(inst.null_edges)
    detours = [k for k in range(inst.n_edges) if k not in nulls]
    keep = rng.choice(detours, size=max(0, max_edges - len(nulls)), replace=False)
    sub, _ = inst.restrict(sorted(nulls | {int(k) for k in keep}), range(inst.n_groups), inst.budget)
    return sub
