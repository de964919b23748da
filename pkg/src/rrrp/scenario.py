"""Scenario files and the built-in two-UAV, two-UGV monitoring layout."""

from __future__ import annotations

import json
import math
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .energy import EnergyModel
from .geometry import Polyline
from .sim import Scenario, SimConfig

# scenario-file keys under "sim" -> SimConfig fields
_SIM_KEYS = {"replan_s": "replan_s", "horizon_s": "horizon_s", "recharge_s": "recharge_s", "rho": "rho",
             "seed": "seed", "trials": "trials", "max_time_s": "max_time_s", "capacity": "capacity",
             "initial_soc": "initial_soc", "planner_samples": "planner_samples"}


def _loop(center, rx, ry, n, phase=0.0):
    ang = phase + 2 * math.pi * np.arange(n) / n
    return np.column_stack([center[0] + rx * np.cos(ang), center[1] + ry * np.sin(ang)])


def default_scenario(config: SimConfig | None = None, energy: EnergyModel | None = None) -> Scenario:
    """Two task loops, each swinging away from the road loop of its UGV.

    Road loops are 6 km x 4 km rectangles (one UGV lap about 4400 s).  Task
    nodes sit about 1.9 km apart on 7 km x 5 km ellipses; each ellipse
    crosses one long side of its road loop and reaches 4 km beyond it, so
    part of every lap is far from any UGV.  One UAV lap takes about 1950 s.
    """
    w, h = 6000.0, 4000.0
    west_road = np.array([[0, 0], [w, 0], [w, h], [0, h]], float)
    east_road = west_road + [w + 1000, 0]
    west_tour = _loop((w / 2, 5500.0), 3500, 2500, 10)
    east_tour = _loop((w + 1000 + w / 2, h - 5500.0), 3500, 2500, 10, phase=math.pi)
    return Scenario((Polyline(west_tour), Polyline(east_tour)),
                    (Polyline(west_road), Polyline(east_road)),
                    energy or EnergyModel(), config or SimConfig(),
                    (0.0, 0.0), (0.0, 0.0))


def scenario_to_dict(sc: Scenario) -> dict:
    c = sc.config
    return {
        "uav_tours": [t.to_list() for t in sc.uav_tours],
        "ugv_roads": [t.to_list() for t in sc.ugv_roads],
        "uav_start": list(sc.uav_start),
        "ugv_start": list(sc.ugv_start),
        "speeds": {"uav": c.uav_speed, "ugv": c.ugv_speed},
        "energy": sc.energy.to_dict(),
        "sim": {key: getattr(c, attr) for key, attr in _SIM_KEYS.items()},
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        uav = tuple(Polyline(np.asarray(t, float)) for t in doc["uav_tours"])
        ugv = tuple(Polyline(np.asarray(t, float)) for t in doc["ugv_roads"])
    except KeyError as exc:
        raise ValueError(f"scenario is missing {exc.args[0]!r}") from exc
    speeds = doc.get("speeds", {})
    sim = dict(doc.get("sim", {}))
    unknown = set(sim) - set(_SIM_KEYS)
    if unknown:
        raise ValueError(f"unknown sim keys: {sorted(unknown)}")
    kw = {_SIM_KEYS[k]: v for k, v in sim.items()}
    if "uav" in speeds:
        kw["uav_speed"] = float(speeds["uav"])
    if "ugv" in speeds:
        kw["ugv_speed"] = float(speeds["ugv"])
    cfg = SimConfig(**kw)
    energy = EnergyModel.from_dict(doc["energy"]) if "energy" in doc else EnergyModel()
    return Scenario(uav, ugv, energy, cfg, tuple(doc.get("uav_start", ())), tuple(doc.get("ugv_start", ())))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=1)


def with_config(sc: Scenario, **changes) -> Scenario:
    names = {f.name for f in fields(SimConfig)}
    bad = set(changes) - names
    if bad:
        raise ValueError(f"unknown config fields {sorted(bad)}")
    return replace(sc, config=replace(sc.config, **changes))
