"""Full-horizon deterministic campaign model.

All ``Γ`` missions are scheduled in one MILP for a known parameter vector:
deployments become variables, and each mission's leftover inventory, plant
stock and a year of production feed the next mission's balances.  This is
the deterministic planner used for the worst-case and semi-worst-case
comparisons, and a lower bound for any sequential policy facing the same
parameters.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import transform as tf
from .milp import Limits, MilpModel, ModelBuilder, Status, solve_lp, solve_milp
from .netmodel import MAINT, PLANT, PROP, ScenarioSpec
from .scheduler import (UNIT, CampaignState, ConfigurationError, DesignGrid, VehicleDesign,
                        _Assembler, _fixed_design_terms)


@dataclass
class HorizonModel:
    model: MilpModel
    design: VehicleDesign
    q: tf.StochasticParams
    actions: list[int]
    mission_costs: list[dict[int, float]]


@dataclass
class HorizonResult:
    feasible: bool
    cost_kg: float = float("nan")
    design: VehicleDesign | None = None
    design_index: int = -1
    actions_kg: list[float] = field(default_factory=list)
    mission_costs_kg: list[float] = field(default_factory=list)
    status: Status = Status.INFEASIBLE
    gap: float = float("inf")


def assemble_horizon(sc: ScenarioSpec, design: VehicleDesign,
                     q: tf.StochasticParams) -> HorizonModel:
    """Joint model of every mission for one fixed design."""
    b = ModelBuilder("horizon")
    gamma = sc.missions
    cap = sc.isru_deploy_cap_kg / UNIT
    mr = sc.isru_maint_rate
    site, day = sc.isru_node, float(sc.isru_deploy_day)
    prev_left: dict[tuple[str, int], int] = {}
    prev_stock = prev_oper = None
    actions, mission_costs = [], []
    for tau in range(1, gamma + 1):
        last = tau == gamma
        asm = _Assembler(sc, CampaignState(tau=tau - 1), 0.0, q, "horizon", builder=b,
                         prefix=f"m{tau}_")
        asm.flow_vars()
        a = b.add_var(f"m{tau}_deploy", 0.0, cap)
        actions.append(a)
        t0 = asm.net.time_steps[0]
        rhs_vars: dict[tuple[str, float], dict[int, dict[int, float]]] = {}

        def put(key, c, var, coef):
            d = rhs_vars.setdefault(key, {}).setdefault(c, {})
            d[var] = d.get(var, 0.0) + coef

        put((site, day), PLANT, a, -1.0)
        if not last:
            put((site, day), MAINT, a, -mr)
            if prev_stock is not None:
                put((site, day), MAINT, prev_stock, -mr)
        for (node, c), j in prev_left.items():
            if not (node == site and c == PLANT):
                put((node, t0), c, j, 1.0)
        if prev_oper is not None:
            put((site, t0), PROP, prev_oper, q.production * sc.electrolysis_efficiency)
        terms = _fixed_design_terms(asm, design)
        asm.network_rows(terms, rhs_vars, leftover=not last)
        cost = asm.cost_terms(terms)
        for j, v in cost.items():
            b.add_obj(j, v)
        mission_costs.append(cost)
        if not last:
            oper = b.add_var(f"m{tau}_plant_operating", 0.0, np.inf)
            stock = b.add_var(f"m{tau}_plant_stock", 0.0, np.inf)
            row = {oper: 1.0, a: -1.0}
            if prev_stock is not None:
                row[prev_stock] = -1.0
            b.add_row(row, "=", 0.0, f"m{tau}_plant_operating_def")
            b.add_row({stock: 1.0, oper: -(1.0 - q.decay)}, "=", 0.0, f"m{tau}_plant_decay")
            prev_stock, prev_oper = stock, oper
            prev_left = dict(asm.leftover)
    return HorizonModel(b.build(), design, q, actions, mission_costs)


def solve_horizon(sc: ScenarioSpec, q: tf.StochasticParams, grid: DesignGrid | None = None,
                  limits: Limits | None = None) -> HorizonResult:
    """Optimal joint schedule and design for known ``q``.

    Designs are explored best-bound first using each design's LP relaxation,
    so only designs that could beat the incumbent get a full MILP solve.
    """
    grid = grid or DesignGrid.for_scenario(sc)
    if len(grid) == 0:
        raise ConfigurationError("design grid is empty")
    limits = limits or Limits()
    heap = [(-np.inf, 0, g) for g in range(len(grid))]
    best = HorizonResult(False)
    best_obj = np.inf
    while heap:
        bound, stage, g = heapq.heappop(heap)
        if bound >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
            break
        hm = assemble_horizon(sc, grid.points[g], q)
        if stage == 0:
            lp = solve_lp(hm.model)
            if lp.status == Status.OPTIMAL:
                heapq.heappush(heap, (lp.objective, 1, g))
            continue
        sol = solve_milp(hm.model, limits)
        if not sol.has_primal or sol.objective >= best_obj:
            continue
        best_obj = sol.objective
        x = sol.x
        best = HorizonResult(
            True, sol.objective * UNIT, grid.points[g], g,
            [max(float(x[a]), 0.0) * UNIT for a in hm.actions],
            [float(sum(v * x[j] for j, v in c.items())) * UNIT for c in hm.mission_costs],
            sol.status, sol.gap)
    return best


def worst_case(sc: ScenarioSpec, grid: DesignGrid | None = None,
               limits: Limits | None = None) -> HorizonResult:
    """No ISRU output at all."""
    return solve_horizon(sc, tf.StochasticParams(0.0, 0.0), grid, limits)
