"""Bisection on the Lagrange multiplier of the budget constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import solve_lagrangian, solve_min_weight
from .model import BUDGET_SLACK, RendezvousInstance, Schedule, cost, weight

LAMBDA_START = 1.0
MAX_ITER = 2000


class InfeasibleInstance(RuntimeError):
    """Even the least-weight schedule exceeds the budget."""

    def __init__(self, min_weight: float, budget: float, schedule: Schedule | None = None):
        super().__init__(f"least achievable weight {min_weight:.6g} exceeds budget {budget:.6g}")
        self.min_weight = min_weight
        self.budget = budget
        self.schedule = schedule


@dataclass(frozen=True)
class BudgetSlack:
    """The unconstrained (multiplier zero) optimum already meets the budget."""

    schedule: Schedule
    iterations: int = 1


@dataclass(frozen=True)
class LagrangianCertificate:
    """Two subproblem optima bracketing the budget.

    ``m1`` is optimal at ``lam_u`` and within budget, ``m2`` is optimal at
    ``lam_l`` and at or over budget.  ``lam`` is the multiplier the pair is
    evaluated at (``lam_u``).  ``tight`` marks a subproblem optimum that hit
    the budget exactly, in which case ``m1 == m2``.
    """

    lam: float
    m1: Schedule
    m2: Schedule
    lam_l: float
    lam_u: float
    iterations: int = 0
    tight: bool = False
    absorptions: int = 0

    def gap(self, inst: RendezvousInstance) -> float:
        """``|w(M1) - w(M2)|`` at ``lam``; zero in exact arithmetic."""
        return abs((cost(self.m1, inst) + self.lam * weight(self.m1, inst))
                   - (cost(self.m2, inst) + self.lam * weight(self.m2, inst)))


def default_dlambda_min(inst: RendezvousInstance) -> float:
    a = inst.weight_array
    nz = a[a > 0]
    a_min = float(nz.min()) if nz.size else 1.0
    c_max = max(inst.c_max, 1e-12)
    return 1e-6 * c_max / max(a_min, 1e-12)


def binary_search(inst: RendezvousInstance, dlambda_min: float | None = None,
                  lam0: float = LAMBDA_START) -> LagrangianCertificate | BudgetSlack:
    if dlambda_min is None:
        dlambda_min = default_dlambda_min(inst)
    if dlambda_min <= 0:
        raise ValueError("dlambda_min must be positive")
    budget = inst.budget + BUDGET_SLACK

    x0 = solve_lagrangian(inst, 0.0)
    if weight(x0, inst) <= budget:
        return BudgetSlack(x0)
    xmin = solve_min_weight(inst)
    amin = weight(xmin, inst)
    if amin > budget:
        raise InfeasibleInstance(amin, inst.budget, xmin)

    lam_l, lam_u = 0.0, math.inf
    m1: Schedule | None = None
    m2 = x0
    lam = lam0
    it = 1
    while lam_u - lam_l >= dlambda_min:
        it += 1
        if it > MAX_ITER:
            break
        x = solve_lagrangian(inst, lam)
        a = weight(x, inst)
        if abs(a - inst.budget) <= BUDGET_SLACK:
            return LagrangianCertificate(lam, x, x, lam, lam, it, tight=True)
        if a <= budget:
            m1 = x
            lam_u = lam
            lam = (lam_u + lam_l) / 2
        else:
            m2 = x
            lam_l = lam
            lam = min(2 * lam, lam_u)
    if m1 is None:
        # doubling never reached a feasible optimum before MAX_ITER
        m1, lam_u = xmin, lam
    return LagrangianCertificate(lam_u, m1, m2, lam_l, lam_u, it)


def lagrangian_lower_bound(inst: RendezvousInstance, lam: float) -> float:
    """``min_x w_lam(x) - lam * B``; never exceeds the budgeted optimum."""
    x = solve_lagrangian(inst, lam)
    return cost(x, inst) + lam * weight(x, inst) - lam * inst.budget


def sweep(inst: RendezvousInstance, lams) -> list[tuple[float, float, float]]:
    """``(lam, c(x_lam), a(x_lam))`` along a multiplier grid."""
    out = []
    for lam in np.asarray(lams, dtype=float):
        x = solve_lagrangian(inst, float(lam))
        out.append((float(lam), cost(x, inst), weight(x, inst)))
    return out
