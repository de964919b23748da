"""Stochastic UAV power draw and Monte Carlo survival estimates.

Power follows a polynomial fit in airspeed and takeoff weight.  Weight is
Gaussian, the wind speed Weibull and the wind heading uniform; one draw of
all three holds for a whole flight.  Survival of a flight plan is the share
of draws whose cumulative energy never exceeds what the battery holds.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

log = logging.getLogger(__name__)

WH = 3600.0
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class EnergyModel:
    b0: float = -88.77
    b1: float = 3.53
    b2: float = -0.42
    b3: float = 0.043
    b4: float = 107.5
    b5: float = -2.74
    weight_mu: float = 2.3
    weight_sigma: float = 0.05
    wind_a: float = 1.5
    wind_b: float = 3.0
    capacity_wh: float = 97.0
    samples: int = 2000
    seed: int = 0
    power_floor: float = 1.0

    def __post_init__(self):
        if self.capacity_wh <= 0:
            raise ValueError("battery capacity must be positive")
        if self.weight_sigma < 0:
            raise ValueError("weight sigma must be >= 0")
        if self.wind_a < 0 or self.wind_b <= 0:
            raise ValueError("Weibull parameters must be positive")
        if self.samples < 1:
            raise ValueError("need at least one sample")

    @property
    def capacity_j(self) -> float:
        return self.capacity_wh * WH

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "EnergyModel":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown energy parameters: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class ChargeState:
    energy_j: float
    capacity_j: float

    def __post_init__(self):
        if not (0.0 <= self.energy_j <= self.capacity_j * (1 + 1e-12)):
            raise ValueError(f"state of charge out of range: {self.energy_j} / {self.capacity_j}")

    @property
    def soc(self) -> float:
        return self.energy_j / self.capacity_j

    @classmethod
    def full(cls, model: EnergyModel) -> "ChargeState":
        return cls(model.capacity_j, model.capacity_j)

    @classmethod
    def from_soc(cls, soc: float, model: EnergyModel) -> "ChargeState":
        return cls(soc * model.capacity_j, model.capacity_j)


def power_draw(v_air, w, model: EnergyModel = EnergyModel(), clamp: bool = True):
    """Electrical power in watts at airspeed ``v_air`` (m/s) and weight ``w`` (kg)."""
    v = np.asarray(v_air, dtype=float)
    w = np.asarray(w, dtype=float)
    p = (model.b0 + model.b1 * v + model.b2 * v ** 2 + model.b3 * v ** 3
         + model.b4 * w + model.b5 * v * w)
    if clamp and np.any(p < model.power_floor):
        log.warning("power polynomial fell below %.3g W; clamping", model.power_floor)
        p = np.maximum(p, model.power_floor)
    return float(p) if p.ndim == 0 else p


def airspeed(v_ground, wind_speed, wind_heading_deg):
    """Longitudinal airspeed ``|v + cos(psi) xi|``; ``psi`` relative to the ground track."""
    out = np.abs(np.asarray(v_ground, float)
                 + np.cos(np.radians(np.asarray(wind_heading_deg, float))) * np.asarray(wind_speed, float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Conditions:
    """One flight's worth of random draws per sample."""

    weight: np.ndarray
    wind_speed: np.ndarray
    wind_heading: np.ndarray  # degrees, global frame

    def __len__(self):
        return len(self.weight)


def sample_conditions(model: EnergyModel, seed: int | None = None, n: int | None = None) -> Conditions:
    """Draw ``n`` flight conditions from a Philox stream keyed by ``seed``.

    The k-th draw depends only on ``(seed, k)``, so results are the same
    however the samples are later split across workers.
    """
    n = model.samples if n is None else n
    seed = model.seed if seed is None else seed
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2 ** 64 - 1)))
    u = rng.random((n, 3))
    from scipy.special import ndtri
    w = model.weight_mu + model.weight_sigma * ndtri(np.clip(u[:, 0], 1e-300, 1 - 1e-16))
    # inverse-CDF Weibull: a * (-ln(1-u))^(1/b)
    xi = model.wind_a * (-np.log1p(-u[:, 1])) ** (1.0 / model.wind_b)
    psi = 360.0 * u[:, 2]
    return Conditions(w, xi, psi)


def leg_power(cond: Conditions, speed: float, heading_deg: float, model: EnergyModel):
    """Power per sample while flying at ground ``speed`` along ``heading_deg``."""
    if speed == 0:
        return power_draw(np.zeros(len(cond)), cond.weight, model)
    v_air = airspeed(speed, cond.wind_speed, cond.wind_heading - heading_deg)
    return power_draw(v_air, cond.weight, model)


@dataclass(frozen=True)
class Leg:
    """A straight flight leg; ``speed == 0`` means hovering for ``duration``."""

    distance: float
    speed: float
    heading: float = 0.0
    hover_s: float = 0.0

    @property
    def duration(self) -> float:
        if self.speed > 0:
            return self.distance / self.speed
        return self.hover_s

    @classmethod
    def wait(cls, seconds: float) -> "Leg":
        return cls(0.0, 0.0, 0.0, seconds)


def plan_energy(plan, cond: Conditions, model: EnergyModel) -> np.ndarray:
    """Cumulative energy (J) per sample at each leg boundary, shape ``(S, len(plan))``."""
    cols = [leg_power(cond, leg.speed, leg.heading, model) * leg.duration for leg in plan]
    if not cols:
        return np.zeros((len(cond), 0))
    return np.cumsum(np.stack(cols, axis=1), axis=1)


def survival_probability(state: ChargeState, plan, model: EnergyModel = EnergyModel(),
                         seed: int | None = None, threads: int = 1, cond: Conditions | None = None) -> float:
    """Share of sampled flights that finish ``plan`` without emptying the battery."""
    plan = [leg for leg in plan if leg.duration > 0]
    if not plan:
        return 1.0
    if cond is None:
        cond = sample_conditions(model, seed)
    n = len(cond)
    if threads <= 1:
        return _count_ok(state.energy_j, plan, cond, model, 0, n) / n
    bounds = np.linspace(0, n, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(lambda ij: _count_ok(state.energy_j, plan, cond, model, *ij),
                         zip(bounds[:-1], bounds[1:]))
        return sum(parts) / n


def _count_ok(energy, plan, cond, model, i, j) -> int:
    sub = Conditions(cond.weight[i:j], cond.wind_speed[i:j], cond.wind_heading[i:j])
    cum = plan_energy(plan, sub, model)
    return int(np.count_nonzero(np.all(cum <= energy, axis=1)))


def depletion_probability(state: ChargeState, plan, model: EnergyModel = EnergyModel(),
                          seed: int | None = None, threads: int = 1) -> float:
    """Probability of running out of charge somewhere along ``plan``."""
    return 1.0 - survival_probability(state, plan, model, seed, threads)


def edge_probability(state: ChargeState, to_rendezvous, after_recharge, model: EnergyModel = EnergyModel(),
                     seed: int | None = None) -> float:
    """Success probability of a recharging detour.

    ``to_rendezvous`` is flown on the current charge (tour legs up to the
    departure point, the flight to the UGV and any wait); ``after_recharge``
    starts from a full battery.  A null edge passes its whole horizon plan as
    ``to_rendezvous`` and an empty ``after_recharge``.
    """
    cond = sample_conditions(model, seed)
    p1 = survival_probability(state, to_rendezvous, model, cond=cond)
    p2 = survival_probability(ChargeState.full(model), after_recharge, model, cond=cond)
    return p1 * p2


def worst_case_energy(plan, model: EnergyModel, sigmas: float = 6.0) -> float:
    """Energy bound with weight ``mu + k sigma`` and the strongest plausible headwind."""
    w = model.weight_mu + sigmas * model.weight_sigma
    # Weibull quantile at 1 - 1e-9
    xi = model.wind_a * (-math.log(1e-9)) ** (1.0 / model.wind_b)
    total = 0.0
    for leg in plan:
        if leg.speed == 0:
            total += power_draw(0.0, w, model) * leg.duration
        else:
            vs = np.linspace(max(leg.speed - xi, 0.0), leg.speed + xi, 401)
            total += float(np.max(power_draw(vs, w, model))) * leg.duration
    return total
