"""Mission geometry and construction of rendezvous instances from it.

UAV tours and UGV roads are polylines parametrised by arc length.  Positions
are unrolled arc lengths, so a cyclic tour keeps counting past one lap.
UGV roads are cut into rendezvous vertices every ``ugv_speed * recharge_s``
metres from the UGV's current position; a recharge started at vertex ``m``
ends at vertex ``m + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .energy import (PROB_FLOOR, ChargeState, Conditions, EnergyModel, Leg, leg_power,
                     power_draw, sample_conditions)
from .model import Edge, InstanceError, RendezvousInstance

TIME_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Polyline:
    """Piecewise-linear path through ``points``; closed when ``cyclic``."""

    points: np.ndarray
    cyclic: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise InstanceError("tour needs at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @cached_property
    def seg_len(self) -> np.ndarray:
        nxt = np.roll(self.points, -1, axis=0) if self.cyclic else self.points[1:]
        cur = self.points if self.cyclic else self.points[:-1]
        return np.hypot(*(nxt - cur).T)

    @cached_property
    def node_arc(self) -> np.ndarray:
        """Arc length of every node within the first lap."""
        return np.concatenate([[0.0], np.cumsum(self.seg_len)])[: self.n_nodes]

    @property
    def length(self) -> float:
        return float(self.seg_len.sum())

    @cached_property
    def seg_heading(self) -> np.ndarray:
        nxt = np.roll(self.points, -1, axis=0) if self.cyclic else self.points[1:]
        cur = self.points if self.cyclic else self.points[:-1]
        d = nxt - cur
        return np.degrees(np.arctan2(d[:, 1], d[:, 0]))

    def _wrap(self, s: float) -> tuple[int, float]:
        """Lap number and in-lap arc of unrolled position ``s``."""
        L = self.length
        if not self.cyclic or L == 0:
            return 0, min(max(s, 0.0), L)
        lap = math.floor(s / L)
        return lap, s - lap * L

    def segment_at(self, s: float) -> int:
        _, r = self._wrap(s)
        i = int(np.searchsorted(self.node_arc, r, side="right")) - 1
        return min(max(i, 0), max(len(self.seg_len) - 1, 0))

    def point_at(self, s: float) -> np.ndarray:
        if len(self.seg_len) == 0 or self.length == 0:
            return self.points[0].copy()
        _, r = self._wrap(s)
        i = self.segment_at(s)
        frac = 0.0 if self.seg_len[i] == 0 else (r - self.node_arc[i]) / self.seg_len[i]
        b = self.points[(i + 1) % self.n_nodes]
        return self.points[i] + min(max(frac, 0.0), 1.0) * (b - self.points[i])

    def nodes_between(self, s_lo: float, s_hi: float, include_lo: bool = False) -> np.ndarray:
        """Unrolled arcs of nodes in ``(s_lo, s_hi]`` (``[s_lo, s_hi]`` if ``include_lo``)."""
        L = self.length
        if not self.cyclic or L == 0:
            arcs = self.node_arc
        else:
            first = math.floor(s_lo / L) - 1
            last = math.floor(s_hi / L) + 1
            arcs = (np.arange(first, last + 1)[:, None] * L + self.node_arc[None, :]).ravel()
        lo_ok = arcs >= s_lo - TIME_TOL if include_lo else arcs > s_lo + TIME_TOL
        return np.unique(arcs[lo_ok & (arcs <= s_hi + TIME_TOL)])

    def next_node(self, s: float) -> float:
        """Arc of the first node strictly after ``s``; an open tour's end maps to itself."""
        if self.length == 0:
            return s
        nxt = self.nodes_between(s, s + (self.length if self.cyclic else math.inf))
        if len(nxt):
            return float(nxt[0])
        return self.length

    def is_node(self, s: float) -> bool:
        return len(self.nodes_between(s, s, include_lo=True)) > 0

    def legs(self, s_lo: float, s_hi: float, speed: float) -> list[Leg]:
        """Straight legs flown between unrolled arcs ``s_lo`` and ``s_hi``."""
        if not self.cyclic:
            s_hi = min(s_hi, self.length)
        if s_hi <= s_lo or self.length == 0:
            return []
        cuts = np.concatenate([[s_lo], self.nodes_between(s_lo, s_hi), [s_hi]])
        cuts = np.unique(cuts)
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a <= 0:
                continue
            h = float(self.seg_heading[self.segment_at(0.5 * (a + b))])
            out.append(Leg(float(b - a), speed, h))
        return out

    def to_list(self) -> list[list[float]]:
        return self.points.tolist()


@dataclass(frozen=True, eq=False)
class MissionGeometry:
    """Tours, speeds and the current state of every vehicle.

    ``uav_arc``/``ugv_arc`` are unrolled arc positions on the respective
    tours; ``uav_soc`` is each UAV's state of charge in ``[0, 1]``.
    """

    uav_tours: tuple[Polyline, ...]
    ugv_tours: tuple[Polyline, ...]
    uav_speed: float = 9.8
    ugv_speed: float = 4.5
    recharge_s: float = 100.0
    horizon_s: float = 2500.0
    uav_arc: tuple[float, ...] = ()
    ugv_arc: tuple[float, ...] = ()
    uav_soc: tuple[float, ...] = ()

    def __post_init__(self):
        if self.uav_speed <= 0 or self.ugv_speed <= 0:
            raise InstanceError("speeds must be positive")
        if self.recharge_s <= 0 or self.horizon_s <= 0:
            raise InstanceError("recharge duration and horizon must be positive")
        if not self.uav_tours or not self.ugv_tours:
            raise InstanceError("need at least one UAV tour and one UGV road")
        n_a, n_g = len(self.uav_tours), len(self.ugv_tours)
        if not self.uav_arc:
            object.__setattr__(self, "uav_arc", (0.0,) * n_a)
        if not self.ugv_arc:
            object.__setattr__(self, "ugv_arc", (0.0,) * n_g)
        if not self.uav_soc:
            object.__setattr__(self, "uav_soc", (1.0,) * n_a)
        if len(self.uav_arc) != n_a or len(self.uav_soc) != n_a or len(self.ugv_arc) != n_g:
            raise InstanceError("one state entry per vehicle required")
        for tour, s in [*zip(self.uav_tours, self.uav_arc), *zip(self.ugv_tours, self.ugv_arc)]:
            if s < 0 or (not tour.cyclic and s > tour.length + TIME_TOL):
                raise InstanceError(f"position {s} is not on its tour")
        if any(not 0.0 <= x <= 1.0 for x in self.uav_soc):
            raise InstanceError("state of charge must lie in [0, 1]")

    @property
    def spacing(self) -> float:
        """Distance the UGV covers during one recharge."""
        return self.ugv_speed * self.recharge_s

    def with_state(self, uav_arc=None, ugv_arc=None, uav_soc=None) -> "MissionGeometry":
        return MissionGeometry(self.uav_tours, self.ugv_tours, self.uav_speed, self.ugv_speed,
                               self.recharge_s, self.horizon_s,
                               tuple(uav_arc) if uav_arc is not None else self.uav_arc,
                               tuple(ugv_arc) if ugv_arc is not None else self.ugv_arc,
                               tuple(uav_soc) if uav_soc is not None else self.uav_soc)


@dataclass(frozen=True)
class DepartureVertex:
    uav: int
    index: int
    arc: float
    time: float
    point: tuple[float, float]
    next_arc: float
    next_point: tuple[float, float]

    @property
    def leg(self) -> float:
        return self.next_arc - self.arc


@dataclass(frozen=True)
class RendezvousVertex:
    ugv: int
    index: int
    time: float
    point: tuple[float, float]
    exit_time: float
    exit_point: tuple[float, float]


@dataclass(frozen=True)
class Detour:
    """Deterministic timeline of one recharging detour, relative to plan time."""

    uav: int
    ugv: int
    depart: DepartureVertex
    rendezvous: RendezvousVertex
    arrive_time: float
    wait: float
    back_time: float
    cost: float

    @property
    def to_ugv(self) -> float:
        return _dist(self.depart.point, self.rendezvous.point)

    @property
    def from_ugv(self) -> float:
        return _dist(self.rendezvous.exit_point, self.depart.next_point)


def _dist(a, b) -> float:
    return float(math.hypot(a[0] - b[0], a[1] - b[1]))


def _heading(a, b) -> float:
    return math.degrees(math.atan2(b[1] - a[1], b[0] - a[0]))


def departure_vertices(geom: MissionGeometry, r: int) -> list[DepartureVertex]:
    """Current position plus every task node reached within the horizon."""
    tour = geom.uav_tours[r]
    s0 = geom.uav_arc[r]
    v = geom.uav_speed
    reach = s0 + v * geom.horizon_s
    arcs = [s0] + [float(a) for a in tour.nodes_between(s0, reach)]
    out = []
    for j, s in enumerate(arcs):
        nxt = tour.next_node(s)
        out.append(DepartureVertex(r, j, s, (s - s0) / v, tuple(tour.point_at(s)),
                                   nxt, tuple(tour.point_at(nxt))))
    return out


def rendezvous_vertices(geom: MissionGeometry, k: int) -> list[RendezvousVertex]:
    """UGV vertices whose recharge window closes within the horizon."""
    road = geom.ugv_tours[k]
    g0 = geom.ugv_arc[k]
    f, R = geom.spacing, geom.recharge_s
    out = []
    m = 0
    while (m + 1) * R <= geom.horizon_s + TIME_TOL:
        if not road.cyclic and g0 + (m + 1) * f > road.length + TIME_TOL:
            break
        out.append(RendezvousVertex(k, m, m * R, tuple(road.point_at(g0 + m * f)),
                                    (m + 1) * R, tuple(road.point_at(g0 + (m + 1) * f))))
        m += 1
    return out


def detour_timeline(dep: DepartureVertex, rdv: RendezvousVertex, geom: MissionGeometry) -> Detour | None:
    """Timeline of flying from ``dep`` to ``rdv``, or ``None`` when infeasible."""
    v = geom.uav_speed
    arrive = dep.time + _dist(dep.point, rdv.point) / v
    if arrive > rdv.time + TIME_TOL:
        return None
    back = rdv.exit_time + _dist(rdv.exit_point, dep.next_point) / v
    if back > geom.horizon_s + TIME_TOL:
        return None
    overhead = back - dep.time - dep.leg / v
    return Detour(dep.uav, rdv.ugv, dep, rdv, arrive, max(rdv.time - arrive, 0.0), back, max(overhead, 0.0))


def detour_cost(dep: DepartureVertex, rdv: RendezvousVertex, geom: MissionGeometry) -> float | None:
    """Time overhead of the detour against staying on tour; ``None`` if no edge."""
    d = detour_timeline(dep, rdv, geom)
    return None if d is None else d.cost


def candidate_detours(geom: MissionGeometry) -> list[Detour]:
    """Every geometrically feasible detour, ordered by UAV, departure, UGV and vertex."""
    rdvs = [rendezvous_vertices(geom, k) for k in range(len(geom.ugv_tours))]
    out = []
    for r in range(len(geom.uav_tours)):
        for dep in departure_vertices(geom, r):
            for verts in rdvs:
                for rdv in verts:
                    d = detour_timeline(dep, rdv, geom)
                    if d is not None:
                        out.append(d)
    return out


class TourEnergy:
    """Per-sample cumulative energy along a tour, for vectorised lookups."""

    def __init__(self, tour: Polyline, cond: Conditions, model: EnergyModel, speed: float,
                 s_start: float, s_end: float):
        self.speed = speed
        self.s_start = s_start
        cuts = [s_start] + [float(a) for a in tour.nodes_between(s_start, s_end)]
        if cuts[-1] < s_end:
            cuts.append(s_end)
        self.cuts = np.asarray(cuts)
        n = len(self.cuts) - 1
        S = len(cond)
        self.power = np.zeros((S, max(n, 1)))
        cache: dict[float, np.ndarray] = {}
        for i in range(n):
            mid = 0.5 * (self.cuts[i] + self.cuts[i + 1])
            if not tour.cyclic and mid > tour.length:
                continue  # open tour finished; vehicle idle
            h = float(tour.seg_heading[tour.segment_at(mid)]) if len(tour.seg_len) else 0.0
            if h not in cache:
                cache[h] = leg_power(cond, speed, h, model)
            self.power[:, i] = cache[h]
        dt = np.diff(self.cuts) / speed
        self.cum = np.zeros((S, n + 1))
        if n:
            self.cum[:, 1:] = np.cumsum(self.power[:, :n] * dt, axis=1)

    def at(self, s) -> np.ndarray:
        """Energy spent from ``s_start`` to each arc in ``s``; shape ``(S, len(s))``."""
        s = np.clip(np.asarray(s, dtype=float), self.cuts[0], self.cuts[-1])
        i = np.clip(np.searchsorted(self.cuts, s, side="right") - 1, 0, self.power.shape[1] - 1)
        return self.cum[:, i] + self.power[:, i] * ((s - self.cuts[i]) / self.speed)

    def between(self, s_lo, s_hi) -> np.ndarray:
        return self.at(s_hi) - self.at(s_lo)


def _straight_energy(cond, model, speed, starts, ends) -> np.ndarray:
    """``(S, K)`` energy of K straight legs from ``starts`` to ``ends``."""
    starts = np.asarray(starts, float).reshape(-1, 2)
    ends = np.asarray(ends, float).reshape(-1, 2)
    d = ends - starts
    dist = np.hypot(d[:, 0], d[:, 1])
    head = np.arctan2(d[:, 1], d[:, 0])
    psi = np.radians(cond.wind_heading)
    # cos(psi - h) = cos psi cos h + sin psi sin h, without S*K trig calls
    along = (np.outer(cond.wind_speed * np.cos(psi), np.cos(head))
             + np.outer(cond.wind_speed * np.sin(psi), np.sin(head)))
    v_air = np.abs(speed + along, out=along)
    w = cond.weight[:, None]
    b = model
    p = ((b.b3 * v_air + b.b2) * v_air + (b.b1 + b.b5 * w)) * v_air + (b.b0 + b.b4 * w)
    if np.any(p < b.power_floor):
        p = np.maximum(p, b.power_floor)
    p *= (dist / speed)[None, :]
    return p


def uav_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(r)]).generate_state(1, np.uint64)[0])


def detour_probabilities(geom: MissionGeometry, r: int, detours: Sequence[Detour], model: EnergyModel,
                         seed: int = 0) -> tuple[np.ndarray, float]:
    """Success probabilities of ``detours`` of UAV ``r`` and of its null option.

    All options of one UAV share the same Monte Carlo draws.
    """
    cond = sample_conditions(model, uav_seed(seed, r))
    tour = geom.uav_tours[r]
    v, T = geom.uav_speed, geom.horizon_s
    s0 = geom.uav_arc[r]
    e0 = geom.uav_soc[r] * model.capacity_j
    cap = model.capacity_j
    span = 2 * v * T + (float(tour.seg_len.max()) if len(tour.seg_len) else 0.0) + 1.0
    tour_e = TourEnergy(tour, cond, model, v, s0, s0 + span)
    p_null = float(np.mean(tour_e.at([s0 + v * T])[:, 0] <= e0))
    if not detours:
        return np.zeros(0), p_null
    dep_arc = np.array([d.depart.arc for d in detours])
    e1 = tour_e.at(dep_arc)
    e1 += _straight_energy(cond, model, v, [d.depart.point for d in detours],
                           [d.rendezvous.point for d in detours])
    hover = power_draw(np.zeros(len(cond)), cond.weight, model)
    e1 += hover[:, None] * np.array([d.wait for d in detours])[None, :]
    p1 = np.mean(e1 <= e0, axis=0)
    e2 = _straight_energy(cond, model, v, [d.rendezvous.exit_point for d in detours],
                          [d.depart.next_point for d in detours])
    rejoin = np.array([d.depart.next_arc for d in detours])
    rest = np.array([max(T - d.back_time, 0.0) for d in detours])
    e2 += tour_e.between(rejoin, rejoin + v * rest)
    p2 = np.mean(e2 <= cap, axis=0)
    return p1 * p2, p_null


def detour_plans(geom: MissionGeometry, d: Detour) -> tuple[list[Leg], list[Leg]]:
    """Explicit leg lists (before recharge, after recharge) for one detour."""
    tour = geom.uav_tours[d.uav]
    v = geom.uav_speed
    s0 = geom.uav_arc[d.uav]
    before = tour.legs(s0, d.depart.arc, v)
    before.append(Leg(d.to_ugv, v, _heading(d.depart.point, d.rendezvous.point)))
    before.append(Leg.wait(d.wait))
    after = [Leg(d.from_ugv, v, _heading(d.rendezvous.exit_point, d.depart.next_point))]
    rest = max(geom.horizon_s - d.back_time, 0.0)
    after += tour.legs(d.depart.next_arc, d.depart.next_arc + v * rest, v)
    return before, after


def null_plan(geom: MissionGeometry, r: int) -> list[Leg]:
    s0 = geom.uav_arc[r]
    return geom.uav_tours[r].legs(s0, s0 + geom.uav_speed * geom.horizon_s, geom.uav_speed)


def budget_for(rho: float) -> float:
    if not 0.0 < rho < 1.0:
        raise ValueError(f"risk level must lie in (0, 1), got {rho}")
    return math.log(1.0 / rho)


def build_instance(geom: MissionGeometry, energy: EnergyModel, rho: float, capacity: int = 1, *,
                   seed: int = 0, blocked: Mapping[int, Sequence[tuple[float, float]]] | None = None,
                   prune: bool = False) -> RendezvousInstance:
    """Rendezvous instance for the next horizon.

    ``rho`` is the required joint success probability, so the budget is
    ``ln(1/rho)``.  ``blocked[k]`` lists recharge windows (relative times)
    already booked on UGV ``k``; each overlapping window takes one copy of the
    affected vertices.  ``edge_info`` of the result holds the :class:`Detour`
    behind each edge (``None`` for null edges).  With ``prune`` edges that
    can never be needed by an optimum are removed (see
    :func:`rrrp.model.prune_dominated`).
    """
    budget = budget_for(rho)
    if capacity < 1:
        raise InstanceError("capacity must be >= 1")
    blocked = blocked or {}
    n_a = len(geom.uav_tours)
    rdvs = [rendezvous_vertices(geom, k) for k in range(len(geom.ugv_tours))]

    # UGV vertex copies, minus copies held by bookings
    ugv_ids: list[int] = []
    copy_map: dict[int, tuple[int, int, int] | None] = {}
    copies: dict[tuple[int, int], list[int]] = {}
    for k, verts in enumerate(rdvs):
        for rv in verts:
            held = sum(1 for a, b in blocked.get(k, ())
                       if min(b, rv.exit_time) - max(a, rv.time) > TIME_TOL)
            ids = []
            for c in range(max(capacity - held, 0)):
                gid = len(ugv_ids)
                ugv_ids.append(gid)
                copy_map[gid] = (k, rv.index, c)
                ids.append(gid)
            copies[(k, rv.index)] = ids
    null_g = []
    for r in range(n_a):
        gid = len(ugv_ids)
        ugv_ids.append(gid)
        copy_map[gid] = None
        null_g.append(gid)

    groups = []
    edges: list[Edge] = []
    info: list[Detour | None] = []
    nulls = []
    labels: dict[int, object] = {}
    vid = 0
    for r in range(n_a):
        deps = departure_vertices(geom, r)
        dets = []
        for dep in deps:
            for verts in rdvs:
                for rv in verts:
                    if not copies[(rv.ugv, rv.index)]:
                        continue
                    d = detour_timeline(dep, rv, geom)
                    if d is not None:
                        dets.append(d)
        probs, p_null = detour_probabilities(geom, r, dets, energy, seed)
        dep_ids = list(range(vid, vid + len(deps)))
        for dep, u in zip(deps, dep_ids):
            labels[u] = ("depart", r, dep.index, dep.arc)
        null_v = vid + len(deps)
        labels[null_v] = ("null", r)
        vid = null_v + 1
        groups.append(tuple(dep_ids) + (null_v,))
        nulls.append(len(edges))
        edges.append(Edge.from_prob(null_v, null_g[r], 0.0, max(p_null, PROB_FLOOR)))
        info.append(None)
        for d, p in zip(dets, probs):
            if p <= 0.0:
                continue
            for g in copies[(d.ugv, d.rendezvous.index)]:
                edges.append(Edge.from_prob(dep_ids[d.depart.index], g, d.cost, float(p)))
                info.append(d)
    inst = RendezvousInstance(tuple(groups), tuple(ugv_ids), tuple(edges), budget, capacity,
                              tuple(nulls), copy_map, labels, tuple(info))
    if prune:
        from .model import prune_dominated
        inst, _ = prune_dominated(inst)
    return inst
