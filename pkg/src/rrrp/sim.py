"""Receding-horizon persistent-monitoring simulator.

UAVs fly closed task tours, UGVs drive closed road loops at constant speed
and never wait.  Every ``replan_s`` seconds a policy picks recharging
detours for the UAVs that are not already on one.  Energy drains at the
polynomial power draw under per-sortie weight and wind draws; each battery
swap starts a new sortie with fresh draws.  Power is constant between
events, so the simulation advances event to event and integrates exactly.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bicriteria import bicriteria_solve, run_pipeline
from .energy import EnergyModel, power_draw
from .geometry import (TIME_TOL, Detour, MissionGeometry, Polyline, build_instance, departure_vertices,
                       detour_timeline, rendezvous_vertices)
from .lagrangian import InfeasibleInstance
from .model import RendezvousInstance, Schedule, capacity_violations
from .oracle import OracleInfeasible, OracleTooLarge, exact_solve

log = logging.getLogger(__name__)

SOLVERS = ("bicriteria", "feasible", "exact")


@dataclass(frozen=True)
class SimConfig:
    replan_s: float = 120.0
    horizon_s: float = 2500.0
    uav_speed: float = 9.8
    ugv_speed: float = 4.5
    recharge_s: float = 100.0
    rho: float = 0.1
    max_time_s: float = 40_000.0
    seed: int = 0
    trials: int = 20
    capacity: int = 1
    initial_soc: float = 1.0
    planner_samples: int = 1000

    def __post_init__(self):
        if self.replan_s <= 0 or self.horizon_s <= 0 or self.max_time_s <= 0:
            raise ValueError("time parameters must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.trials < 1 or self.capacity < 1:
            raise ValueError("trials and capacity must be >= 1")


@dataclass(frozen=True)
class RRRPPolicy:
    """Schedule by solving the rendezvous problem every replan tick.

    ``rho`` is the tolerated probability that some UAV runs dry within the
    horizon, i.e. the instance asks for joint success ``1 - rho``.
    ``rho=None`` takes the value from :class:`SimConfig`.
    """

    rho: float | None = None
    eps: float = 1.0
    solver: str = "bicriteria"
    fallback_on_violation: bool = True
    dlambda_min: float | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")

    @property
    def name(self) -> str:
        return "rrrp" if self.solver == "bicriteria" else f"rrrp-{self.solver}"


@dataclass(frozen=True)
class GreedyThreshold:
    """Head for the cheapest reachable rendezvous once SOC drops below ``fraction``."""

    fraction: float

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    @property
    def name(self) -> str:
        return f"greedy-{round(self.fraction * 100):d}"


def parse_policy(text: str) -> RRRPPolicy | GreedyThreshold:
    """``rrrp``, ``rrrp:feasible``, ``rrrp:exact``, ``greedy:0.5`` or ``greedy-50``."""
    t = text.strip().lower()
    if t.startswith("greedy"):
        arg = t[6:].lstrip(":-")
        val = float(arg)
        return GreedyThreshold(val / 100.0 if val > 1 else val)
    if t.startswith("rrrp"):
        arg = t[4:].lstrip(":-")
        return RRRPPolicy(solver=arg or "bicriteria")
    raise ValueError(f"unknown policy {text!r}")


@dataclass(frozen=True)
class Scenario:
    uav_tours: tuple[Polyline, ...]
    ugv_roads: tuple[Polyline, ...]
    energy: EnergyModel = EnergyModel()
    config: SimConfig = SimConfig()
    uav_start: tuple[float, ...] = ()
    ugv_start: tuple[float, ...] = ()

    def geometry(self) -> MissionGeometry:
        c = self.config
        return MissionGeometry(self.uav_tours, self.ugv_roads, c.uav_speed, c.ugv_speed, c.recharge_s,
                               c.horizon_s, self.uav_start, self.ugv_start,
                               (c.initial_soc,) * len(self.uav_tours))


@dataclass
class SimMetrics:
    ttff_s: float
    overhead: float
    nodes: float
    rdv_per_horizon: float
    failed: bool = True
    rendezvous: int = 0
    max_load: int = 0

    def __post_init__(self):
        if self.overhead < -1e-9 or self.nodes < 0 or self.rendezvous < 0:
            raise ValueError("metrics out of range")


@dataclass
class TrialResult:
    metrics: SimMetrics
    events: list[dict]
    soc_trace: list[list[tuple[float, float]]]
    segments: list[list[tuple[float, float, float, float, float]]]

    def event_log(self) -> str:
        buf = io.StringIO()
        for rec in self.events:
            buf.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
            buf.write("\n")
        return buf.getvalue()


# -- vehicle state ------------------------------------------------------------

TOUR, TO_RDV, WAIT, CHARGE, RETURN, FAILED = "tour", "to_rdv", "wait", "charge", "return", "failed"


@dataclass
class _Booking:
    """An accepted detour in absolute time."""

    ugv: int
    vertex: int
    depart_arc: float
    depart_time: float
    rdv_time: float
    exit_time: float
    rdv_point: tuple[float, float]
    exit_point: tuple[float, float]
    next_arc: float
    next_point: tuple[float, float]
    cost: float


@dataclass
class _UAV:
    idx: int
    tour: Polyline
    arc: float
    energy: float
    weight: float
    wind_speed: float
    wind_heading: float
    mode: str = TOUR
    pos: tuple[float, float] = (0.0, 0.0)
    plan: _Booking | None = None  # accepted but not yet started
    active: _Booking | None = None  # detour in progress
    seg_end: float = 0.0
    seg_power: float = 0.0
    leg_from: tuple[float, float] = (0.0, 0.0)
    leg_to: tuple[float, float] = (0.0, 0.0)
    leg_t0: float = 0.0
    stop_arc: float = 0.0
    start_arc: float = 0.0
    nodes: int = 0
    rendezvous: int = 0
    armed: bool = True


class _World:
    def __init__(self, scenario: Scenario, policy, seed: int, record: bool):
        self.sc = scenario
        self.cfg = scenario.config
        self.energy = scenario.energy
        self.policy = policy
        self.seed = int(seed)
        self.rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0x5EED]))
        self.geom0 = scenario.geometry()
        self.cap = self.energy.capacity_j
        self.t = 0.0
        self.events: list[dict] = []
        self.record = record
        self.uavs: list[_UAV] = []
        self.trace: list[list[tuple[float, float]]] = []
        self.segments: list[list[tuple]] = []
        self.ticks = 0
        self.max_load = 0
        for r, tour in enumerate(self.geom0.uav_tours):
            u = _UAV(r, tour, self.geom0.uav_arc[r], self.geom0.uav_soc[r] * self.cap, 0.0, 0.0, 0.0)
            u.start_arc = u.arc
            u.pos = tuple(tour.point_at(u.arc))
            self._new_sortie(u)
            self.uavs.append(u)
            self.trace.append([(0.0, u.energy / self.cap)])
            self.segments.append([])
            self.emit(u.idx, "start", arc=u.arc, soc=u.energy / self.cap, weight=u.weight,
                      wind_speed=u.wind_speed, wind_heading=u.wind_heading)
        for u in self.uavs:
            self._begin_segment(u)

    # -- helpers --------------------------------------------------------
    def emit(self, vehicle, event, **data):
        self.events.append({"t": round(self.t, 9), "vehicle": vehicle, "event": event,
                            "data": {k: _jsonable(v) for k, v in data.items()}})

    def _new_sortie(self, u: _UAV):
        e = self.energy
        u.weight = float(self.rng.normal(e.weight_mu, e.weight_sigma))
        u.wind_speed = float(e.wind_a * self.rng.weibull(e.wind_b))
        u.wind_heading = float(self.rng.uniform(0.0, 360.0))

    def _power(self, u: _UAV, speed: float, heading: float) -> float:
        if speed == 0:
            return float(power_draw(0.0, u.weight, self.energy))
        v_air = abs(speed + math.cos(math.radians(u.wind_heading - heading)) * u.wind_speed)
        return float(power_draw(v_air, u.weight, self.energy))

    def ugv_arc(self, k: int, t: float) -> float:
        return self.geom0.ugv_arc[k] + self.cfg.ugv_speed * t

    def _begin_segment(self, u: _UAV):
        """Set the constant-power segment that starts at ``self.t``."""
        v = self.cfg.uav_speed
        u.leg_t0 = self.t
        if u.mode == TOUR:
            nxt = u.tour.next_node(u.arc)
            stop = nxt
            if u.plan is not None and u.plan.depart_arc < stop - TIME_TOL:
                stop = u.plan.depart_arc
            if u.tour.length == 0 or (not u.tour.cyclic and u.arc >= u.tour.length - TIME_TOL):
                u.seg_end, u.seg_power = math.inf, 0.0
                return
            heading = float(u.tour.seg_heading[u.tour.segment_at(0.5 * (u.arc + stop))])
            u.seg_end = self.t + (stop - u.arc) / v
            u.stop_arc = stop
            u.seg_power = self._power(u, v, heading)
            u.leg_from, u.leg_to = u.pos, tuple(u.tour.point_at(stop))
        elif u.mode == TO_RDV:
            b = u.active
            d = math.dist(u.pos, b.rdv_point)
            u.seg_end = self.t + d / v
            u.seg_power = self._power(u, v, _heading(u.pos, b.rdv_point)) if d > 0 else 0.0
            u.leg_from, u.leg_to = u.pos, b.rdv_point
        elif u.mode == WAIT:
            u.seg_end = max(u.active.rdv_time, self.t)
            u.seg_power = self._power(u, 0.0, 0.0) if u.seg_end > self.t else 0.0
            u.leg_from = u.leg_to = u.pos
        elif u.mode == CHARGE:
            u.seg_end = u.active.exit_time
            u.seg_power = 0.0
            u.leg_from, u.leg_to = u.active.rdv_point, u.active.exit_point
        elif u.mode == RETURN:
            b = u.active
            d = math.dist(u.pos, b.next_point)
            u.seg_end = self.t + d / v
            u.seg_power = self._power(u, v, _heading(u.pos, b.next_point)) if d > 0 else 0.0
            u.leg_from, u.leg_to = u.pos, b.next_point
        else:
            u.seg_end, u.seg_power = math.inf, 0.0

    def _advance(self, u: _UAV, t_new: float):
        dt = t_new - self.t
        if dt <= 0:
            return
        e0 = u.energy
        u.energy -= u.seg_power * dt
        if self.record and u.seg_power > 0:
            self.segments[u.idx].append((self.t, t_new, u.seg_power, e0, u.energy))
        if u.mode == TOUR:
            u.arc += self.cfg.uav_speed * dt
        span = u.seg_end - u.leg_t0
        if span > 0 and math.isfinite(span):
            frac = min(max((t_new - u.leg_t0) / span, 0.0), 1.0)
            u.pos = (u.leg_from[0] + frac * (u.leg_to[0] - u.leg_from[0]),
                     u.leg_from[1] + frac * (u.leg_to[1] - u.leg_from[1]))
        if self.record:
            self.trace[u.idx].append((t_new, max(u.energy, 0.0) / self.cap))

    def _event_time(self, u: _UAV) -> tuple[float, str]:
        best = (u.seg_end, "segment")
        if u.seg_power > 0:
            t_fail = self.t + u.energy / u.seg_power
            if t_fail < best[0]:
                best = (t_fail, "failure")
            if isinstance(self.policy, GreedyThreshold) and u.armed and u.mode == TOUR and u.plan is None:
                thr = self.policy.fraction * self.cap
                if u.energy > thr:
                    t_thr = self.t + (u.energy - thr) / u.seg_power
                    if t_thr < best[0]:
                        best = (t_thr, "threshold")
        return best

    # -- segment completions ------------------------------------------------
    def _finish_segment(self, u: _UAV):
        if u.mode == TOUR:
            u.pos = u.leg_to
            u.arc = u.stop_arc
            if u.tour.is_node(u.arc):
                u.nodes += 1
                self.emit(u.idx, "node", arc=u.arc)
            if u.plan is not None and abs(u.plan.depart_arc - u.arc) <= 1e-6:
                self._start_detour(u)
        elif u.mode == TO_RDV:
            u.pos = u.active.rdv_point
            self.emit(u.idx, "arrive_rdv", ugv=u.active.ugv, vertex=u.active.vertex)
            u.mode = WAIT
        elif u.mode == WAIT:
            u.mode = CHARGE
            u.rendezvous += 1
            self.emit(u.idx, "recharge_start", ugv=u.active.ugv, soc=u.energy / self.cap)
            self._check_load(u.active)
        elif u.mode == CHARGE:
            u.energy = self.cap
            u.pos = u.active.exit_point
            self._new_sortie(u)
            self.emit(u.idx, "recharge_end", soc=1.0, weight=u.weight, wind_speed=u.wind_speed,
                      wind_heading=u.wind_heading)
            if self.record:
                self.trace[u.idx].append((self.t, 1.0))
            u.mode = RETURN
        elif u.mode == RETURN:
            u.pos = u.active.next_point
            u.arc = u.active.next_arc
            u.active = None
            u.mode = TOUR
            u.armed = True
            if u.tour.is_node(u.arc):
                u.nodes += 1
            self.emit(u.idx, "rejoin", arc=u.arc)
        self._begin_segment(u)

    def _check_load(self, b: _Booking):
        load = sum(1 for w in self.uavs if w.active is not None and w.mode == CHARGE
                   and w.active.ugv == b.ugv and w.active.rdv_time < b.exit_time - TIME_TOL
                   and b.rdv_time < w.active.exit_time - TIME_TOL)
        self.max_load = max(self.max_load, load)
        if load > self.cfg.capacity:
            self.emit("ugv%d" % b.ugv, "over_capacity", load=load)

    def _start_detour(self, u: _UAV):
        b = u.plan
        u.plan = None
        u.active = b
        u.mode = TO_RDV
        self.emit(u.idx, "depart", arc=u.arc, ugv=b.ugv, vertex=b.vertex, rdv_time=b.rdv_time,
                  exit_time=b.exit_time, next_arc=b.next_arc, cost=b.cost, soc=u.energy / self.cap)

    # -- planning -------------------------------------------------------------
    def bookings(self) -> dict[int, list[tuple[float, float]]]:
        """Recharge windows of committed detours, relative to now."""
        out: dict[int, list[tuple[float, float]]] = {}
        for u in self.uavs:
            if u.active is not None and u.active.exit_time > self.t:
                out.setdefault(u.active.ugv, []).append((u.active.rdv_time - self.t, u.active.exit_time - self.t))
        return out

    def free_uavs(self) -> list[_UAV]:
        return [u for u in self.uavs if u.mode == TOUR]

    def local_geometry(self, uavs: Sequence[_UAV]) -> MissionGeometry:
        g = self.geom0
        return MissionGeometry(tuple(u.tour for u in uavs), g.ugv_tours, g.uav_speed, g.ugv_speed,
                               g.recharge_s, g.horizon_s, tuple(u.arc for u in uavs),
                               tuple(self.ugv_arc(k, self.t) for k in range(len(g.ugv_tours))),
                               tuple(min(max(u.energy / self.cap, 0.0), 1.0) for u in uavs))

    def _book(self, u: _UAV, d: Detour):
        b = _Booking(d.ugv, d.rendezvous.index, d.depart.arc, self.t + d.depart.time,
                     self.t + d.rendezvous.time, self.t + d.rendezvous.exit_time, d.rendezvous.point,
                     d.rendezvous.exit_point, d.depart.next_arc, d.depart.next_point, d.cost)
        u.plan = b
        if d.depart.index == 0:
            self._start_detour(u)
            self._begin_segment(u)
        else:
            self._begin_segment(u)  # the tour segment may now stop at the departure node

    def replan(self):
        self.ticks += 1
        free = self.free_uavs()
        if not free:
            return
        if isinstance(self.policy, GreedyThreshold):
            for u in free:
                if u.plan is None and u.energy < self.policy.fraction * self.cap:
                    self.greedy(u)
            return
        for u in free:
            u.plan = None
        pol = self.policy
        rho = pol.rho if pol.rho is not None else self.cfg.rho
        geom = self.local_geometry(free)
        energy = replace(self.energy, samples=self.cfg.planner_samples)
        plan_seed = int(np.random.SeedSequence([self.seed, self.ticks]).generate_state(1)[0])
        inst = build_instance(geom, energy, 1.0 - rho, self.cfg.capacity, seed=plan_seed,
                              blocked=self.bookings(), prune=True)
        sched, status = self._solve(inst, pol)
        chosen = []
        for k in sorted(sched.edges):
            d = inst.edge_info[k]
            r = int(inst.edge_group[k])
            if d is not None:
                self._book(free[r], d)
                chosen.append([free[r].idx, d.ugv, d.rendezvous.index, d.depart.index])
        for u in free:
            if u.plan is None and u.mode == TOUR:
                self._begin_segment(u)
        self.emit("team", "replan", status=status, edges=inst.n_edges, chosen=chosen,
                  soc=[round(u.energy / self.cap, 6) for u in free])

    def _solve(self, inst: RendezvousInstance, pol: RRRPPolicy) -> tuple[Schedule, str]:
        try:
            if pol.solver == "exact":
                try:
                    return exact_solve(inst), "ok"
                except OracleTooLarge:
                    res = bicriteria_solve(inst, pol.eps, pol.dlambda_min, True)
                    return res.schedule, "oracle-too-large"
                except OracleInfeasible:
                    raise InfeasibleInstance(float("nan"), inst.budget,
                                             run_pipeline_min_weight(inst))
            if pol.solver == "feasible":
                return run_pipeline(inst, pol.dlambda_min).feasible, "ok"
            res = bicriteria_solve(inst, pol.eps, pol.dlambda_min, pol.fallback_on_violation)
            if res.used_fallback:
                return res.schedule, "fallback"
            if capacity_violations(res.schedule, inst):
                return res.schedule, "over-capacity"
            return res.schedule, "ok"
        except InfeasibleInstance as exc:
            sched = exc.schedule if exc.schedule is not None else run_pipeline_min_weight(inst)
            return sched, "infeasible"

    def greedy(self, u: _UAV) -> bool:
        geom = self.local_geometry([u])
        dep = departure_vertices(geom, 0)[0]
        held = self.bookings()
        best = None
        for k in range(len(geom.ugv_tours)):
            for rv in rendezvous_vertices(geom, k):
                busy = sum(1 for a, b in held.get(k, ()) if min(b, rv.exit_time) - max(a, rv.time) > TIME_TOL)
                if busy >= self.cfg.capacity:
                    continue
                d = detour_timeline(dep, rv, geom)
                if d is not None and (best is None or (d.cost, d.back_time) < (best.cost, best.back_time)):
                    best = d
        if best is None:
            self.emit(u.idx, "greedy_no_rdv", soc=u.energy / self.cap)
            return False
        u.armed = False
        self._book(u, best)
        return True

    # -- main loop ------------------------------------------------------------
    def run(self) -> TrialResult:
        cfg = self.cfg
        next_tick = 0.0
        failed = False
        while True:
            if self.t >= next_tick - TIME_TOL and self.t < cfg.max_time_s:
                self.replan()
                next_tick += cfg.replan_s
            t_ev, kind, who = min(((*self._event_time(u), u.idx) for u in self.uavs),
                                  key=lambda x: (x[0], x[2]))
            t_stop = min(t_ev, next_tick, cfg.max_time_s)
            for u in self.uavs:
                self._advance(u, t_stop)
            self.t = t_stop
            if t_stop >= cfg.max_time_s - TIME_TOL and t_ev > t_stop + TIME_TOL:
                break
            if t_ev > t_stop + TIME_TOL:
                continue  # replan tick
            u = self.uavs[who]
            if kind == "failure":
                u.energy = 0.0
                u.mode = FAILED
                self.emit(u.idx, "failure", arc=u.arc)
                failed = True
                break
            if kind == "threshold":
                u.energy = self.policy.fraction * self.cap
                self.emit(u.idx, "threshold", soc=self.policy.fraction)
                if not self.greedy(u):
                    u.armed = False  # retried at replan ticks
                    self._begin_segment(u)
                continue
            self._finish_segment(u)
        return self._finish(failed)

    def _finish(self, failed: bool) -> TrialResult:
        cfg = self.cfg
        t_end = self.t
        progress = []
        for u in self.uavs:
            # the tour arc stays put while a detour is under way
            progress.append(u.arc - u.start_arc)
            self.emit(u.idx, "end", arc=u.arc, soc=max(u.energy, 0.0) / self.cap, nodes=u.nodes)
        task = sum(progress) / cfg.uav_speed
        actual = t_end * len(self.uavs)
        overhead = (actual - task) / task if task > 0 else 0.0
        n_a = len(self.uavs)
        rdv = sum(u.rendezvous for u in self.uavs)
        per_h = rdv / n_a * cfg.horizon_s / t_end if t_end > 0 else 0.0
        m = SimMetrics(t_end, max(overhead, 0.0), sum(u.nodes for u in self.uavs) / n_a, per_h,
                       failed, rdv, self.max_load)
        self.emit("team", "metrics", ttff_s=m.ttff_s, overhead=m.overhead, nodes=m.nodes,
                  rdv_per_horizon=m.rdv_per_horizon, failed=failed)
        return TrialResult(m, self.events, self.trace, self.segments)


def run_pipeline_min_weight(inst: RendezvousInstance) -> Schedule:
    from .flow import solve_min_weight
    return solve_min_weight(inst)


def _heading(a, b) -> float:
    return math.degrees(math.atan2(b[1] - a[1], b[0] - a[0]))


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return round(float(v), 9)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def run_trial(scenario: Scenario, policy, seed: int | None = None, record: bool = True) -> TrialResult:
    """One simulated mission until the first depletion or ``max_time_s``."""
    seed = scenario.config.seed if seed is None else seed
    return _World(scenario, policy, seed, record).run()


# -- studies ------------------------------------------------------------------

CSV_HEADER = "policy,rho,seed,ttff_s,overhead,nodes,rdv_per_horizon"


@dataclass(frozen=True)
class StudyRow:
    policy: str
    rho: float | None
    seed: int
    metrics: SimMetrics

    def csv(self) -> str:
        m = self.metrics
        rho = "" if self.rho is None else repr(float(self.rho))
        return (f"{self.policy},{rho},{self.seed},{m.ttff_s:.3f},{m.overhead:.6f},"
                f"{m.nodes:.3f},{m.rdv_per_horizon:.6f}")


def trial_seeds(base: int, n: int) -> list[int]:
    return [int(base) + i for i in range(n)]


def run_study(scenario: Scenario, policies, rhos: Sequence[float] | None = None, n_trials: int | None = None,
              seed: int | None = None, workers: int = 1, logs: dict | None = None) -> list[StudyRow]:
    """Every policy (RRRP policies at every ``rho``) over ``n_trials`` seeds.

    Rows come back sorted by (policy order, rho, seed) whatever ``workers`` is.
    When ``logs`` is a dict it receives the event log of every trial.
    """
    cfg = scenario.config
    n = cfg.trials if n_trials is None else n_trials
    base = cfg.seed if seed is None else seed
    jobs = []
    for pol in policies:
        if isinstance(pol, RRRPPolicy):
            for rho in (rhos if rhos else [pol.rho if pol.rho is not None else cfg.rho]):
                jobs += [(replace(pol, rho=rho), rho, s) for s in trial_seeds(base, n)]
        else:
            jobs += [(pol, None, s) for s in trial_seeds(base, n)]

    args = [(scenario, j, logs is not None) for j in jobs]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(one_job, args))
    else:
        out = [one_job(a) for a in args]
    rows = []
    for (pol, rho, s), (row, text) in zip(jobs, out):
        rows.append(row)
        if logs is not None:
            logs[(row.policy, rho, s)] = text
    return rows


def one_job(arg):
    scenario, (pol, rho, s), want_log = arg
    res = run_trial(scenario, pol, s, record=want_log)
    return StudyRow(pol.name, rho, s, res.metrics), res.event_log() if want_log else None


def rows_to_csv(rows: Sequence[StudyRow]) -> str:
    return CSV_HEADER + "\n" + "".join(r.csv() + "\n" for r in rows)


def rows_from_csv(text: str) -> list[StudyRow]:
    import csv
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        m = SimMetrics(float(rec["ttff_s"]), float(rec["overhead"]), float(rec["nodes"]),
                       float(rec["rdv_per_horizon"]))
        out.append(StudyRow(rec["policy"], float(rec["rho"]) if rec["rho"] else None, int(rec["seed"]), m))
    return out


@dataclass(frozen=True)
class Summary:
    policy: str
    rho: float | None
    n: int
    mean: dict
    ci: dict


METRIC_NAMES = ("ttff_s", "overhead", "nodes", "rdv_per_horizon")


def summarize(rows: Sequence[StudyRow], level: float = 0.9, n_boot: int = 2000, seed: int = 0) -> list[Summary]:
    """Mean and percentile-bootstrap confidence interval per (policy, rho)."""
    groups: dict[tuple, list[StudyRow]] = {}
    for r in sorted(rows, key=lambda r: r.seed):
        groups.setdefault((r.policy, r.rho), []).append(r)
    out = []
    for (pol, rho), rs in groups.items():
        mean, ci = {}, {}
        for name in METRIC_NAMES:
            x = np.array([getattr(r.metrics, name) for r in rs])
            mean[name] = float(x.mean())
            ci[name] = bootstrap_ci(x, level, n_boot, seed)
        out.append(Summary(pol, rho, len(rs), mean, ci))
    return out


def bootstrap_ci(x, level: float = 0.9, n_boot: int = 2000, seed: int = 0) -> tuple[float, float]:
    x = np.asarray(x, float)
    if len(x) == 1:
        return float(x[0]), float(x[0])
    rng = np.random.default_rng(seed)
    means = x[rng.integers(0, len(x), (n_boot, len(x)))].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def prob_mean_ge(x, y, n_boot: int = 5000, seed: int = 0) -> float:
    """Bootstrap share of resamples with ``mean(x) >= mean(y)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    rng = np.random.default_rng(seed)
    mx = x[rng.integers(0, len(x), (n_boot, len(x)))].mean(axis=1)
    my = y[rng.integers(0, len(y), (n_boot, len(y)))].mean(axis=1)
    return float(np.mean(mx >= my - 1e-9))


def summary_csv(summaries: Sequence[Summary]) -> str:
    cols = ["policy", "rho", "n"]
    for m in METRIC_NAMES:
        cols += [m, f"{m}_lo", f"{m}_hi"]
    lines = [",".join(cols)]
    for s in summaries:
        vals = [s.policy, "" if s.rho is None else repr(float(s.rho)), str(s.n)]
        for m in METRIC_NAMES:
            vals += [f"{s.mean[m]:.6g}", f"{s.ci[m][0]:.6g}", f"{s.ci[m][1]:.6g}"]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
