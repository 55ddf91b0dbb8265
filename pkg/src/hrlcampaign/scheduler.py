"""Single-mission space transportation scheduling MILP.

The model is a time-expanded generalized multicommodity flow over one mission
cycle.  Flows are aggregated per (arc, departure day): the fleet on an arc is
an integer head count ``n`` and every capacity or dry-mass term scales with
it.  In design mode the vehicle capacities are decision variables restricted
to a candidate grid, and each product ``capacity * n`` is linearized exactly
with ordered unary vehicle slots and McCormick envelopes.

All masses inside the MILP are tonnes; everything crossing the module
boundary is kilograms.
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import transform as tf
from .milp import Limits, MilpModel, MilpSolution, ModelBuilder, Status, solve_milp
from .netmodel import (CIDX, COMMODITY_IDS, CREW, MASS_COMMODITIES, NCOM, PLANT, MAINT, SAMPLE,
                       VEHICLE,
                       HoldoverArc, ScenarioSpec, TimeExpandedNetwork, expand_network)

UNIT = 1000.0  # kilograms per MILP mass unit
AUDIT_TOL = 1e-6

# Published (payload, propellant, dry mass) designs in kg, used to calibrate
# the affine sizing model.
REFERENCE_DESIGNS = np.array([
    [3958.0, 131479.0, 25321.0],
    [3897.0, 129676.0, 24960.0],
    [3790.0, 124655.0, 24096.0],
    [3723.0, 98213.0, 20749.0],
    [3733.0, 102397.0, 21278.0],
])


class ConfigurationError(ValueError):
    pass


class FlowAuditError(AssertionError):
    """A decoded solution violates mass balance, concurrency or time windows."""


# ---------------------------------------------------------------------------
# vehicle sizing
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SizingModel:
    """Dry mass as an affine map of the capacities, or a bilinear table.

    With ``table`` set, ``(payload_pts, propellant_pts, dry)`` define a
    rectilinear grid and dry mass is interpolated bilinearly inside its hull.
    """

    c0: float = 0.0
    c1: float = 2.39334
    c2: float = 0.120543
    table: tuple[tuple[float, ...], tuple[float, ...], tuple[tuple[float, ...], ...]] | None = None

    def __post_init__(self):
        if self.table is None:
            if min(self.c0, self.c1, self.c2) < 0:
                raise ConfigurationError("affine sizing coefficients must be nonnegative")
        else:
            p, f, d = (np.asarray(a, float) for a in self.table)
            if d.shape != (len(p), len(f)) or np.any(np.diff(p) <= 0) or np.any(np.diff(f) <= 0):
                raise ConfigurationError("sizing table needs increasing axes and a matching grid")
            if np.any(np.diff(d, axis=0) < 0) or np.any(np.diff(d, axis=1) < 0) or d.min() < 0:
                raise ConfigurationError("sizing table must be nonnegative and nondecreasing")

    @property
    def is_affine(self) -> bool:
        return self.table is None

    @classmethod
    def from_scenario(cls, sc: ScenarioSpec) -> "SizingModel":
        return cls(*sc.sizing)


def sizing_dry_mass(model: SizingModel, payload_kg: float, propellant_kg: float) -> float:
    if payload_kg < 0 or propellant_kg < 0:
        raise ValueError("capacities must be nonnegative")
    if model.table is None:
        return model.c0 + model.c1 * payload_kg + model.c2 * propellant_kg
    p, f, d = (np.asarray(a, float) for a in model.table)
    if not (p[0] <= payload_kg <= p[-1] and f[0] <= propellant_kg <= f[-1]):
        raise ValueError(f"design ({payload_kg}, {propellant_kg}) outside the sizing table hull")
    i = min(max(int(np.searchsorted(p, payload_kg, side="right")) - 1, 0), len(p) - 2) if len(p) > 1 else 0
    j = min(max(int(np.searchsorted(f, propellant_kg, side="right")) - 1, 0), len(f) - 2) if len(f) > 1 else 0
    if len(p) == 1 and len(f) == 1:
        return float(d[0, 0])
    u = 0.0 if len(p) == 1 else (payload_kg - p[i]) / (p[i + 1] - p[i])
    w = 0.0 if len(f) == 1 else (propellant_kg - f[j]) / (f[j + 1] - f[j])
    i1 = i + (len(p) > 1)
    j1 = j + (len(f) > 1)
    return float((1 - u) * (1 - w) * d[i, j] + u * (1 - w) * d[i1, j] + (1 - u) * w * d[i, j1]
                 + u * w * d[i1, j1])


def calibrate_affine(rows: np.ndarray = REFERENCE_DESIGNS) -> SizingModel:
    """Least-squares fit of ``dry ~ c0 + c1 p + c2 f`` with nonnegative ``c0``.

    The unconstrained fit is used when its intercept is nonnegative;
    otherwise the intercept is pinned at zero (the active-set solution).
    """
    rows = np.asarray(rows, float)
    A = np.column_stack([np.ones(len(rows)), rows[:, 0], rows[:, 1]])
    c, *_ = np.linalg.lstsq(A, rows[:, 2], rcond=None)
    if c[0] < 0:
        c12, *_ = np.linalg.lstsq(A[:, 1:], rows[:, 2], rcond=None)
        c = np.array([0.0, *c12])
    return SizingModel(*(float(v) for v in c))


@dataclass(frozen=True)
class VehicleDesign:
    payload_kg: float
    propellant_kg: float
    dry_kg: float

    @classmethod
    def sized(cls, payload_kg: float, propellant_kg: float, sizing: SizingModel) -> "VehicleDesign":
        return cls(float(payload_kg), float(propellant_kg),
                   sizing_dry_mass(sizing, payload_kg, propellant_kg))

    @classmethod
    def zero(cls) -> "VehicleDesign":
        return cls(0.0, 0.0, 0.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.payload_kg, self.propellant_kg, self.dry_kg)


@dataclass(frozen=True)
class DesignGrid:
    """Candidate designs.

    ``axes`` is set for a rectilinear grid under an affine sizing model; the
    scheduler then encodes the choice with two integer indices instead of one
    binary per point.
    """

    points: tuple[VehicleDesign, ...]
    axes: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self):
        if not self.points:
            raise ConfigurationError("design grid is empty")

    @classmethod
    def regular(cls, payload_range: Sequence[float], propellant_range: Sequence[float],
                npts: Sequence[int], sizing: SizingModel) -> "DesignGrid":
        ps = np.linspace(payload_range[0], payload_range[1], int(npts[0]))
        fs = np.linspace(propellant_range[0], propellant_range[1], int(npts[1]))
        pts = tuple(VehicleDesign.sized(p, f, sizing) for p in ps for f in fs)
        axes = (tuple(float(v) for v in ps), tuple(float(v) for v in fs)) if sizing.is_affine else None
        return cls(pts, axes)

    @classmethod
    def for_scenario(cls, sc: ScenarioSpec, npts: Sequence[int] | None = None) -> "DesignGrid":
        return cls.regular(sc.payload_range_kg, sc.propellant_range_kg, npts or sc.grid_points,
                           SizingModel.from_scenario(sc))

    @classmethod
    def of(cls, designs: Sequence[VehicleDesign]) -> "DesignGrid":
        return cls(tuple(designs))

    def __len__(self) -> int:
        return len(self.points)

    def bounds(self) -> np.ndarray:
        a = np.array([d.as_tuple() for d in self.points])
        return np.vstack([a.min(0), a.max(0)])


# ---------------------------------------------------------------------------
# campaign state
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CampaignState:
    """Mission index, deployments so far, observed ISRU performance, design, carryover.

    ``inventories`` maps node ids to commodity vectors (kg; head counts for crew
    and vehicles) available at the first event of the next mission.
    ``isru_stock_kg`` is the effective installed plant mass.
    """

    tau: int = 0
    deployed_kg: tuple[float, ...] = ()
    observed_q: tf.StochasticParams | None = None
    design: VehicleDesign | None = None
    isru_stock_kg: float = 0.0
    inventories: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def inventory(self, node: str) -> np.ndarray:
        v = self.inventories.get(node)
        return np.zeros(NCOM) if v is None else np.asarray(v, float)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------
@functools.lru_cache(maxsize=64)
def _network(sc: ScenarioSpec) -> TimeExpandedNetwork:
    return expand_network(sc)


def _drop_cancelled(terms: dict[int, float], scale: float) -> dict[int, float]:
    # Coefficients that cancel up to round-off would otherwise survive as
    # entries near 1e-17 and wreck the conditioning of the basis.
    cut = 1e-12 * scale
    return {j: v for j, v in terms.items() if abs(v) > cut}


def _safe(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", s)


def _tstr(t: float) -> str:
    return f"{t:g}".replace(".", "p").replace("-", "m")


@dataclass(frozen=True)
class Step:
    """Aggregated transport arc: scenario arc ``arc`` departing on day ``t``."""

    arc: int
    src: str
    dst: str
    t: float
    t_arr: float


@dataclass
class MissionProblem:
    model: MilpModel
    scenario: ScenarioSpec
    network: TimeExpandedNetwork
    decoding_map: dict[str, tuple[int, str, str, float, str]]
    steps: list[Step]
    holds: list[HoldoverArc]
    step_vars: list[np.ndarray]
    hold_vars: list[np.ndarray]
    rhs: dict[tuple[str, float], np.ndarray]
    state: CampaignState
    action_kg: float
    q: tf.StochasticParams
    design: VehicleDesign | None = None
    design_grid: DesignGrid | None = None
    design_vars: dict[str, object] = field(default_factory=dict)
    vfa_values: np.ndarray | None = None
    vfa_affine: tuple[float, float, float] | None = None
    row_index: dict[tuple[str, float, int], int] = field(default_factory=dict)

    @property
    def first_mission(self) -> bool:
        return self.design_grid is not None


def mission_rhs(sc: ScenarioSpec, net: TimeExpandedNetwork, state: CampaignState,
                action_kg: float, last_mission: bool) -> dict[tuple[str, float], np.ndarray]:
    """Right-hand side of every node balance, in MILP units.

    Combines the cycle demands, the fleet supplied at the launch node, the
    ISRU deployment and maintenance demands, and the inventory carried over
    from the previous mission.
    """
    grid = net.time_steps
    scale = np.full(NCOM, 1.0 / UNIT)
    scale[CREW] = scale[VEHICLE] = 1.0
    rhs: dict[tuple[str, float], np.ndarray] = {}

    def add(node, t, vec):
        cur = rhs.setdefault((node, t), np.zeros(NCOM))
        cur += vec

    for (node, t), d in net.node_time_index.items():
        add(node, t, d * scale)
    launch = [n.id for n in sc.nodes if n.launch]
    if grid:
        t0 = grid[0]
        for node in launch:
            v = np.zeros(NCOM)
            v[VEHICLE] = sc.fleet_size
            add(node, t0, v)
        for node in sc.node_ids:
            inv = state.inventory(node)
            if np.any(inv != 0) and node not in launch:
                add(node, t0, inv * scale)
    v = np.zeros(NCOM)
    v[PLANT] = -action_kg / UNIT
    if not last_mission:
        v[MAINT] = -sc.isru_maint_rate * (state.isru_stock_kg + action_kg) / UNIT
    if np.any(v != 0):
        add(sc.isru_node, float(sc.isru_deploy_day), v)
    return rhs


class _Assembler:
    def __init__(self, sc: ScenarioSpec, state: CampaignState, action_kg: float,
                 q: tf.StochasticParams, name: str, builder: ModelBuilder | None = None,
                 prefix: str = ""):
        if not 0 <= action_kg <= sc.isru_deploy_cap_kg + 1e-9:
            raise ValueError(f"ISRU action {action_kg} outside [0, {sc.isru_deploy_cap_kg}]")
        self.sc, self.state, self.a, self.q = sc, state, float(action_kg), q
        self.net = _network(sc)
        self.b = builder if builder is not None else ModelBuilder(name)
        self.p = prefix
        self.leftover: dict[tuple[str, int], int] = {}
        self.dmap: dict[str, tuple[int, str, str, float, str]] = {}
        self.steps: list[Step] = []
        for ai, t in self.net.transport_steps():
            a = sc.arcs[ai]
            self.steps.append(Step(ai, a.src, a.dst, t, t + a.tof))
        self.holds = list(self.net.holdover_arcs)
        self.infinite = {n.id: {CIDX[c] for c in n.infinite_supply} for n in sc.nodes}
        self.launch = {n.id for n in sc.nodes if n.launch}
        self.row_index: dict[tuple[str, float, int], int] = {}

    def flow_vars(self):
        b, sc = self.b, self.sc
        self.step_vars = []
        for s in self.steps:
            idx = np.full(NCOM, -1, dtype=np.int64)
            tag = f"{_safe(s.src)}_{_safe(s.dst)}_{_tstr(s.t)}"
            for c in range(NCOM):
                nm = f"{self.p}x_{tag}_{COMMODITY_IDS[c]}"
                if c == VEHICLE:
                    idx[c] = b.add_var(nm, 0, sc.fleet_size, True)
                else:
                    idx[c] = b.add_var(nm, 0, np.inf, c == CREW)
                self.dmap[nm] = (-1, s.src, s.dst, s.t, COMMODITY_IDS[c])
            self.step_vars.append(idx)
        self.hold_vars = []
        for h in self.holds:
            idx = np.full(NCOM, -1, dtype=np.int64)
            tag = f"{_safe(h.node)}_{_tstr(h.t)}"
            for c in range(NCOM):
                if c in self.infinite[h.node]:
                    continue
                nm = f"{self.p}h_{tag}_{COMMODITY_IDS[c]}"
                idx[c] = b.add_var(nm, 0, np.inf, c in (CREW, VEHICLE))
                self.dmap[nm] = (-1, h.node, h.node, h.t, COMMODITY_IDS[c])
            self.hold_vars.append(idx)

    # z expressions: list over NZ of {var: coef}
    def step_z(self, k: int, design_terms: list[dict[int, float]]) -> list[dict[int, float]]:
        idx = self.step_vars[k]
        z = [{int(idx[c]): 1.0} for c in range(NCOM)]
        return z + design_terms

    def hold_z(self, k: int) -> list[dict[int, float]]:
        idx = self.hold_vars[k]
        z = [({int(idx[c]): 1.0} if idx[c] >= 0 else {}) for c in range(NCOM)]
        return z + [{}, {}, {}]

    @staticmethod
    def combine(row: np.ndarray, z: list[dict[int, float]]) -> dict[int, float]:
        out: dict[int, float] = {}
        scale = 0.0
        for k in np.flatnonzero(row):
            for j, v in z[k].items():
                out[j] = out.get(j, 0.0) + row[k] * v
                scale = max(scale, abs(row[k] * v))
        return _drop_cancelled(out, scale)

    def network_rows(self, design_terms_for: Callable[[int], list[dict[int, float]]],
                     rhs_vars: Mapping[tuple[str, float], Mapping[int, dict[int, float]]] | None = None,
                     leftover: bool = False):
        """Balance, concurrency and link rows.

        ``rhs_vars`` adds variable terms to a node's right-hand side (keyed by
        node/time, then commodity).  With ``leftover`` the end-of-cycle surplus
        at dwell nodes becomes an explicit variable, recorded in
        ``self.leftover``, so that a later mission can draw on it.
        """
        sc, b, net = self.sc, self.b, self.net
        grid = net.time_steps
        last = grid[-1] if grid else None
        last_mission = self.state.tau + 1 >= sc.missions
        self.rhs = mission_rhs(sc, net, self.state, self.a, last_mission)
        rhs_vars = rhs_vars or {}
        self.totals = {c: sum(max(v[c], 0.0) for v in self.rhs.values()) for c in (CREW, SAMPLE)}
        out_terms: dict[tuple[str, float], list[dict[int, float]]] = {}
        in_terms: dict[tuple[str, float], list[dict[int, float]]] = {}

        def acc(store, key, c, terms):
            lst = store.setdefault(key, [dict() for _ in range(NCOM)])
            d = lst[c]
            for j, v in terms.items():
                d[j] = d.get(j, 0.0) + v

        for k, s in enumerate(self.steps):
            arc = sc.arcs[s.arc]
            z = self.step_z(k, design_terms_for(k))
            t_, H = tf.transport_transform(arc, sc, UNIT)
            tag = f"{_safe(s.src)}_{_safe(s.dst)}_{_tstr(s.t)}"
            for r in range(H.H.shape[0]):
                terms = self.combine(H.H[r], z)
                if terms:
                    b.add_row(terms, "<=", 0.0, f"{self.p}cap_{tag}_{H.names[r]}")
            # Discrete passengers need a whole vehicle: flow <= system total * n.
            # Valid for every integer solution and much tighter than capacity alone.
            n_var = int(self.step_vars[k][VEHICLE])
            for c, total in self.totals.items():
                if total > 0:
                    b.add_row({int(self.step_vars[k][c]): 1.0, n_var: -total}, "<=", 0.0,
                              f"{self.p}link_{tag}_{COMMODITY_IDS[c]}")
            M = t_.M
            for c in range(NCOM):
                acc(out_terms, (s.src, s.t), c, z[c])
                acc(in_terms, (s.dst, s.t_arr), c, self.combine(M[c], z))
        for k, h in enumerate(self.holds):
            z = self.hold_z(k)
            t_ = tf.holdover_transform(h.node, h.duration, self.q, sc, UNIT)
            tag = f"{_safe(h.node)}_{_tstr(h.t)}"
            for r in range(t_.concurrency.H.shape[0]):
                terms = self.combine(t_.concurrency.H[r], z)
                if terms:
                    b.add_row(terms, "<=", 0.0, f"{self.p}cap_h_{tag}_{t_.concurrency.names[r]}")
            M = t_.M
            for c in range(NCOM):
                if c in self.infinite[h.node]:
                    continue
                acc(out_terms, (h.node, h.t), c, z[c])
                acc(in_terms, (h.node, h.t_next), c, self.combine(M[c], z))

        dwell = set(sc.dwell_nodes())
        for node in sc.node_ids:
            for t in grid:
                outs = out_terms.get((node, t))
                ins = in_terms.get((node, t))
                r = self.rhs.get((node, t), np.zeros(NCOM))
                for c in range(NCOM):
                    if c in self.infinite[node]:
                        continue
                    terms: dict[int, float] = {}
                    scale = 0.0
                    parts = [(outs[c] if outs else {}, 1.0), (ins[c] if ins else {}, -1.0),
                             (rhs_vars.get((node, t), {}).get(c, {}), -1.0)]
                    for part, sgn in parts:
                        for j, v in part.items():
                            terms[j] = terms.get(j, 0.0) + sgn * v
                            scale = max(scale, abs(v))
                    terms = _drop_cancelled(terms, scale)
                    sense = "=" if (node in dwell and t != last) else "<="
                    if (leftover and t == last and node in dwell and node not in self.launch
                            and c not in (CREW, SAMPLE)):
                        # crew and samples cannot accumulate: every unit supplied is demanded
                        j = b.add_var(f"{self.p}left_{_safe(node)}_{COMMODITY_IDS[c]}", 0, np.inf,
                                      c == VEHICLE)
                        self.leftover[(node, c)] = j
                        terms[j] = 1.0
                        sense = "="
                    if not terms:
                        if (sense == "=" and r[c] == 0) or (sense == "<=" and r[c] >= 0):
                            continue
                    self.row_index[(node, t, c)] = b.add_row(
                        terms, sense, float(r[c]), f"{self.p}bal_{_safe(node)}_{_tstr(t)}_{COMMODITY_IDS[c]}")

    def cost_terms(self, design_terms_for) -> dict[int, float]:
        """IMLEO: everything departing a launch node, vehicle dry mass included."""
        cost: dict[int, float] = {}
        crew_m = self.sc.crew_mass_kg / UNIT
        for k, s in enumerate(self.steps):
            if s.src not in self.launch:
                continue
            idx = self.step_vars[k]
            for c in MASS_COMMODITIES:
                cost[int(idx[c])] = cost.get(int(idx[c]), 0.0) + 1.0
            cost[int(idx[CREW])] = cost.get(int(idx[CREW]), 0.0) + crew_m
            for j, v in design_terms_for(k)[0].items():  # dryload entry
                cost[j] = cost.get(j, 0.0) + v
        return cost


def _fixed_design_terms(asm: _Assembler, design: VehicleDesign):
    def terms(k):
        n = int(asm.step_vars[k][VEHICLE])
        return [{n: design.dry_kg / UNIT}, {n: design.payload_kg / UNIT},
                {n: design.propellant_kg / UNIT}]
    return terms


def assemble_mission(state: CampaignState, action_kg: float, sc: ScenarioSpec,
                     design: VehicleDesign, q: tf.StochasticParams | None = None) -> MissionProblem:
    """Mission MILP for a fixed vehicle design."""
    q = q or tf.StochasticParams()
    asm = _Assembler(sc, state, action_kg, q, f"mission{state.tau + 1}")
    asm.flow_vars()
    terms = _fixed_design_terms(asm, design)
    asm.network_rows(terms)
    for j, v in asm.cost_terms(terms).items():
        asm.b.add_obj(j, v)
    return MissionProblem(asm.b.build(), sc, asm.net, asm.dmap, asm.steps, asm.holds,
                          asm.step_vars, asm.hold_vars, asm.rhs, state, float(action_kg), q,
                          design=design, row_index=asm.row_index)


def assemble_first_mission(state: CampaignState, action_kg: float, sc: ScenarioSpec,
                           grid: DesignGrid, vfa=None,
                           q: tf.StochasticParams | None = None) -> MissionProblem:
    """Mission MILP that also chooses the vehicle design from ``grid``.

    The objective is the mission cost plus the value estimate ``vfa`` (any
    object accepted by :func:`hrlcampaign.vfa.predict`) of the chosen design.
    """
    from . import vfa as vfa_mod

    if grid is None or len(grid) == 0:
        raise ConfigurationError("design grid is empty")
    q = q or tf.StochasticParams()
    asm = _Assembler(sc, state, action_kg, q, f"mission{state.tau + 1}_design")
    asm.flow_vars()
    b = asm.b
    lo, hi = grid.bounds() / UNIT  # rows: payload, propellant, dry
    P = b.add_var("design_payload", lo[0], hi[0])
    F = b.add_var("design_propellant", lo[1], hi[1])
    D = b.add_var("design_dry", lo[2], hi[2])
    dvars: dict[str, object] = {"P": P, "F": F, "D": D}
    values = None
    affine = None
    sizing = None
    if grid.axes is not None:
        ps, fs = (np.asarray(a) / UNIT for a in grid.axes)
        sizing = _affine_of(grid)
        if len(ps) > 1:
            kp = b.add_var("design_kp", 0, len(ps) - 1, True)
            b.add_row({P: 1.0, kp: -(ps[1] - ps[0])}, "=", ps[0], "design_payload_grid")
            dvars["kp"] = kp
        else:
            b.add_row({P: 1.0}, "=", ps[0], "design_payload_grid")
        if len(fs) > 1:
            kf = b.add_var("design_kf", 0, len(fs) - 1, True)
            b.add_row({F: 1.0, kf: -(fs[1] - fs[0])}, "=", fs[0], "design_propellant_grid")
            dvars["kf"] = kf
        else:
            b.add_row({F: 1.0}, "=", fs[0], "design_propellant_grid")
        c0, c1, c2 = sizing
        b.add_row({D: 1.0, P: -c1, F: -c2}, "=", c0 / UNIT, "design_sizing")
        if vfa is not None:
            v00 = vfa_mod.predict(vfa, VehicleDesign(0.0, 0.0, c0))
            vp = vfa_mod.predict(vfa, VehicleDesign(UNIT, 0.0, c0)) - v00
            vf = vfa_mod.predict(vfa, VehicleDesign(0.0, UNIT, c0)) - v00
            affine = (v00, vp, vf)
            b.add_obj(P, vp / UNIT)
            b.add_obj(F, vf / UNIT)
            b.obj_constant += v00 / UNIT
    else:
        sel = []
        for g, d in enumerate(grid.points):
            sel.append(b.add_var(f"design_sel_{g}", 0, 1, True))
        b.add_row({j: 1.0 for j in sel}, "=", 1.0, "design_select_one")
        for var, attr in ((P, "payload_kg"), (F, "propellant_kg"), (D, "dry_kg")):
            terms = {var: 1.0}
            for j, d in zip(sel, grid.points):
                terms[j] = terms.get(j, 0.0) - getattr(d, attr) / UNIT
            b.add_row(terms, "=", 0.0, f"design_{attr}")
        dvars["sel"] = sel
        if vfa is not None:
            values = np.array([vfa_mod.predict(vfa, d) for d in grid.points])
            for j, v in zip(sel, values):
                b.add_obj(j, v / UNIT)

    # ordered vehicle slots and McCormick products per step
    fleet = sc.fleet_size
    # With affine sizing the dry-mass product is itself affine in the capacity
    # products (D*y = c0*y + c1*P*y + c2*F*y), which keeps the relaxation tight.
    xs = {"P": (P, lo[0], hi[0]), "F": (F, lo[1], hi[1])}
    if grid.axes is None:
        xs["D"] = (D, lo[2], hi[2])
    prod: list[dict[str, list[int]]] = []
    slots: list[list[int]] = []
    for k, s in enumerate(asm.steps):
        tag = f"{_safe(s.src)}_{_safe(s.dst)}_{_tstr(s.t)}"
        ys = [b.add_var(f"y_{tag}_{v}", 0, 1, True) for v in range(fleet)]
        for v in range(1, fleet):
            b.add_row({ys[v]: 1.0, ys[v - 1]: -1.0}, "<=", 0.0, f"slot_order_{tag}_{v}")
        n = int(asm.step_vars[k][VEHICLE])
        terms = {n: 1.0}
        for y in ys:
            terms[y] = -1.0
        b.add_row(terms, "=", 0.0, f"slot_count_{tag}")
        per: dict[str, list[int]] = {}
        for key, (X, xl, xh) in xs.items():
            ws = []
            for v, y in enumerate(ys):
                w = b.add_var(f"w{key}_{tag}_{v}", 0, xh)
                b.add_row({w: 1.0, y: -xh}, "<=", 0.0, f"mc1_{key}_{tag}_{v}")
                b.add_row({w: 1.0, X: -1.0}, "<=", 0.0, f"mc2_{key}_{tag}_{v}")
                b.add_row({w: 1.0, X: -1.0, y: -xh}, ">=", -xh, f"mc3_{key}_{tag}_{v}")
                if xl > 0:
                    b.add_row({w: 1.0, y: -xl}, ">=", 0.0, f"mc4_{key}_{tag}_{v}")
                ws.append(w)
            per[key] = ws
        prod.append(per)
        slots.append(ys)
    dvars["slots"] = slots
    dvars["products"] = prod

    def terms(k):
        per = prod[k]
        if "D" in per:
            dry = {w: 1.0 for w in per["D"]}
        else:
            c0, c1, c2 = sizing
            dry = {}
            for y, wp, wf in zip(slots[k], per["P"], per["F"]):
                dry[y] = c0 / UNIT
                dry[wp] = c1
                dry[wf] = c2
        return [dry, {w: 1.0 for w in per["P"]}, {w: 1.0 for w in per["F"]}]

    asm.network_rows(terms)
    for j, v in asm.cost_terms(terms).items():
        b.add_obj(j, v)
    return MissionProblem(b.build(), sc, asm.net, asm.dmap, asm.steps, asm.holds, asm.step_vars,
                          asm.hold_vars, asm.rhs, state, float(action_kg), q, design_grid=grid,
                          design_vars=dvars, vfa_values=values, vfa_affine=affine,
                          row_index=asm.row_index)


def _affine_of(grid: DesignGrid) -> tuple[float, float, float]:
    """Recover (c0, c1, c2) from three grid points of an affine-sized grid."""
    pts = np.array([d.as_tuple() for d in grid.points])
    A = np.column_stack([np.ones(len(pts)), pts[:, 0], pts[:, 1]])
    c, *_ = np.linalg.lstsq(A, pts[:, 2], rcond=None)
    if np.max(np.abs(A @ c - pts[:, 2])) > 1e-6 * max(1.0, np.abs(pts[:, 2]).max()):
        raise ConfigurationError("grid axes given but dry masses are not affine in the capacities")
    return tuple(float(v) for v in c)


# ---------------------------------------------------------------------------
# decoding and audit
# ---------------------------------------------------------------------------
@dataclass
class MissionOutcome:
    feasible: bool
    cost_kg: float = float("nan")
    objective_kg: float = float("nan")
    flows: dict[tuple[str, str, float], np.ndarray] = field(default_factory=dict)
    holdovers: dict[tuple[str, float], np.ndarray] = field(default_factory=dict)
    end_state: dict[str, np.ndarray] = field(default_factory=dict)
    chosen_design: VehicleDesign | None = None
    status: Status = Status.INFEASIBLE
    gap: float = float("inf")
    wall_time: float = 0.0
    nodes: int = 0
    max_residual: float = float("nan")


def _to_kg(vec: np.ndarray) -> np.ndarray:
    out = vec * UNIT
    out[CREW] = vec[CREW]
    out[VEHICLE] = vec[VEHICLE]
    return out


def decode(problem: MissionProblem, sol: MilpSolution, audit: bool = True) -> MissionOutcome:
    """Map a solution back to flows, audit it, and extract the carryover inventory."""
    if not sol.has_primal:
        return MissionOutcome(False, status=sol.status, gap=sol.gap, wall_time=sol.wall_time,
                              nodes=sol.nodes)
    x = sol.x
    sc = problem.scenario
    if problem.first_mission:
        dv = problem.design_vars
        pk, fk = x[dv["P"]] * UNIT, x[dv["F"]] * UNIT
        if "sel" in dv:
            g = int(np.argmax([x[j] for j in dv["sel"]]))
            design = problem.design_grid.points[g]
        else:
            design = _nearest(problem.design_grid, pk, fk)
    else:
        design = problem.design

    flows = {}
    for k, s in enumerate(problem.steps):
        flows[(s.src, s.dst, s.t)] = np.array([x[j] for j in problem.step_vars[k]])
    holds = {}
    for k, h in enumerate(problem.holds):
        idx = problem.hold_vars[k]
        holds[(h.node, h.t)] = np.array([x[j] if j >= 0 else 0.0 for j in idx])

    residual, end = audit_flows(problem, flows, holds, design, enforce=audit)
    cost = imleo(problem, flows, design)
    return MissionOutcome(True, cost, sol.objective * UNIT, flows, holds,
                          {k: _to_kg(v) for k, v in end.items()},
                          design if problem.first_mission else None, sol.status, sol.gap,
                          sol.wall_time, sol.nodes, residual)


def _nearest(grid: DesignGrid, pk: float, fk: float) -> VehicleDesign:
    pts = np.array([[d.payload_kg, d.propellant_kg] for d in grid.points])
    g = int(np.argmin(np.abs(pts[:, 0] - pk) + np.abs(pts[:, 1] - fk)))
    return grid.points[g]


def imleo(problem: MissionProblem, flows, design: VehicleDesign) -> float:
    """Mass departing launch nodes, in kg, recomputed from decoded flows."""
    sc = problem.scenario
    launch = {n.id for n in sc.nodes if n.launch}
    total = 0.0
    for (src, _dst, _t), f in flows.items():
        if src in launch:
            n = round(f[VEHICLE])
            total += sum(f[c] for c in MASS_COMMODITIES) * UNIT
            total += f[CREW] * sc.crew_mass_kg + n * design.dry_kg
    return float(total)


def audit_flows(problem: MissionProblem, flows, holds, design: VehicleDesign,
                enforce: bool = True, tol: float = AUDIT_TOL):
    """Recheck balances, concurrency and windows from scratch.

    Vehicle counts are rounded and multiplied by the decoded design directly,
    so the check does not rely on the linearization variables.  Returns the
    largest violation and the end-of-cycle inventory per node (MILP units).
    """
    sc = problem.scenario
    grid = problem.network.time_steps
    last = grid[-1]
    infinite = {n.id: {CIDX[c] for c in n.infinite_supply} for n in sc.nodes}
    dwell = set(sc.dwell_nodes())
    out = {(n, t): np.zeros(NCOM) for n in sc.node_ids for t in grid}
    inn = {(n, t): np.zeros(NCOM) for n in sc.node_ids for t in grid}
    worst = 0.0
    problems: list[str] = []

    def flag(msg, amount):
        nonlocal worst
        worst = max(worst, amount)
        if amount > tol:
            problems.append(msg)

    arcs_by_key = {(s.src, s.dst, s.t): s for s in problem.steps}
    for key, f in flows.items():
        s = arcs_by_key[key]
        arc = sc.arcs[s.arc]
        n = f[VEHICLE]
        for c in (CREW, VEHICLE):
            flag(f"{key}: non-integral {COMMODITY_IDS[c]} flow {f[c]}", abs(f[c] - round(f[c])))
        flag(f"{key}: negative flow", float(-f.min()))
        if np.any(np.abs(f) > tol) and not arc.admits(s.t):
            flag(f"{key}: flow outside the arc's time windows", 1.0)
        n = round(n)
        fz = f.copy()
        fz[VEHICLE] = n
        z = tf.augment(fz, design.dry_kg / UNIT, design.payload_kg / UNIT,
                       design.propellant_kg / UNIT)
        t_, H = tf.transport_transform(arc, sc, UNIT)
        res = H.residual(z)
        for r, v in enumerate(res):
            flag(f"{key}: concurrency row {H.names[r]} violated by {v}", v)
        out[(s.src, s.t)] += fz
        inn[(s.dst, s.t_arr)] += t_.apply(z)
    for (node, t), f in holds.items():
        t1 = grid[grid.index(t) + 1]
        flag(f"hold {node}@{t}: negative flow", float(-f.min()))
        t_ = tf.holdover_transform(node, t1 - t, problem.q, sc, UNIT)
        z = np.concatenate([f, np.zeros(3)])
        for r, v in enumerate(t_.concurrency.residual(z)):
            flag(f"hold {node}@{t}: {t_.concurrency.names[r]} violated by {v}", v)
        out[(node, t)] += f
        inn[(node, t1)] += t_.apply(z)

    end: dict[str, np.ndarray] = {}
    for node in sc.node_ids:
        for t in grid:
            r = problem.rhs.get((node, t), np.zeros(NCOM))
            bal = out[(node, t)] - inn[(node, t)] - r
            for c in range(NCOM):
                if c in infinite[node]:
                    continue
                if node in dwell and t != last:
                    flag(f"balance {node}@{t} {COMMODITY_IDS[c]} off by {bal[c]}", abs(bal[c]))
                else:
                    flag(f"balance {node}@{t} {COMMODITY_IDS[c]} exceeds by {bal[c]}", bal[c])
            if t == last and node in dwell and node not in {n.id for n in sc.nodes if n.launch}:
                left = np.maximum(-bal, 0.0)
                left[list(infinite[node])] = 0.0
                left[CREW] = round(left[CREW])
                left[VEHICLE] = round(left[VEHICLE])
                left[np.abs(left) < 1e-9] = 0.0
                end[node] = left
    if enforce and problems:
        raise FlowAuditError(f"{len(problems)} audit failures; first: {problems[0]}")
    return worst, end


def solve_mission(problem: MissionProblem, limits: Limits | None = None) -> MissionOutcome:
    sol = solve_milp(problem.model, limits)
    return decode(problem, sol)


# ---------------------------------------------------------------------------
# first-mission design search
# ---------------------------------------------------------------------------
def action_sensitivity(problem: MissionProblem, duals: np.ndarray) -> float:
    """d(LP optimum)/d(action) in MILP units per kg, from an optimal dual vector.

    The action enters only the right-hand sides of the plant and maintenance
    balances at the deployment node, so this is a subgradient of the (convex)
    LP value as a function of the action.
    """
    sc = problem.scenario
    key = (sc.isru_node, float(sc.isru_deploy_day))
    last_mission = problem.state.tau + 1 >= sc.missions
    slope = 0.0
    k = problem.row_index.get((*key, PLANT))
    if k is not None:
        slope += duals[k] * (-1.0 / UNIT)
    k = problem.row_index.get((*key, MAINT))
    if k is not None and not last_mission:
        slope += duals[k] * (-sc.isru_maint_rate / UNIT)
    return slope


@dataclass
class DesignBoundCache:
    """Tangent lower bounds on each design's LP value as a function of the action.

    Only meaningful for one fixed (scenario, state, grid) triple, which is
    what the first mission of every episode shares.
    """

    key: tuple
    tangents: dict[int, list[tuple[float, float, float]]] = field(default_factory=dict)

    def bound(self, g: int, action_kg: float) -> float:
        cuts = self.tangents.get(g)
        if not cuts:
            return -np.inf
        return max(v + s * (action_kg - a) for a, v, s in cuts)

    def add(self, g: int, action_kg: float, value: float, slope: float) -> None:
        self.tangents.setdefault(g, []).append((float(action_kg), float(value), float(slope)))


@dataclass
class FirstMissionResult:
    outcome: MissionOutcome
    design_index: int
    vfa_value_kg: float
    lp_solves: int
    milp_solves: int


def solve_first_mission(state: CampaignState, action_kg: float, sc: ScenarioSpec,
                        grid: DesignGrid, vfa=None, q: tf.StochasticParams | None = None,
                        limits: Limits | None = None,
                        cache: DesignBoundCache | None = None) -> FirstMissionResult:
    """Minimize mission cost plus value estimate over the design grid.

    Branch and bound whose first branching level is the design choice: each
    grid point is a child whose relaxation is its fixed-design LP, children
    are explored best-bound first, and only children whose bound beats the
    incumbent get a full MILP solve.  Bounds come from ``cache`` tangents
    when they already prune, otherwise from an exact LP at this action.  The
    result equals the optimum of :func:`assemble_first_mission`'s model.
    """
    import heapq

    from . import vfa as vfa_mod
    from .milp import solve_lp

    q = q or tf.StochasticParams()
    limits = limits or Limits()
    V = np.array([vfa_mod.predict(vfa, d) if vfa is not None else 0.0 for d in grid.points])
    heap = []
    for g in range(len(grid)):
        lb = cache.bound(g, action_kg) if cache is not None else -np.inf
        heap.append((lb + V[g] / UNIT, 0, g))
    heapq.heapify(heap)
    best_obj, best, best_g = np.inf, None, -1
    n_lp = n_milp = 0
    while heap:
        bound, stage, g = heapq.heappop(heap)
        if bound >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
            break
        prob = assemble_mission(state, action_kg, sc, grid.points[g], q)
        if stage == 0:
            lp = solve_lp(prob.model)
            n_lp += 1
            if lp.status != Status.OPTIMAL:
                continue
            if cache is not None:
                cache.add(g, action_kg, lp.objective, action_sensitivity(prob, lp.duals))
            heapq.heappush(heap, (lp.objective + V[g] / UNIT, 1, g))
            continue
        sol = solve_milp(prob.model, limits)
        n_milp += 1
        if not sol.has_primal:
            continue
        obj = sol.objective + V[g] / UNIT
        if obj < best_obj:
            best_obj, best, best_g = obj, (prob, sol), g
    if best is None:
        return FirstMissionResult(MissionOutcome(False), -1, 0.0, n_lp, n_milp)
    prob, sol = best
    out = decode(prob, sol)
    out.chosen_design = grid.points[best_g]
    out.objective_kg = best_obj * UNIT
    return FirstMissionResult(out, best_g, float(V[best_g]), n_lp, n_milp)
