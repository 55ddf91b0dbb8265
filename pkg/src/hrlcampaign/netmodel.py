"""Campaign scenario definition and its time-expanded network.

A scenario is an immutable description of nodes, arcs, demands and the
stochastic ISRU distributions.  ``expand_network`` turns one mission cycle of
it into an event-based time-expanded graph.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import yaml

SCHEMA_VERSION = 1


class Continuity(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class Commodity:
    id: str
    continuity: Continuity
    unit: str


COMMODITIES: tuple[Commodity, ...] = (
    Commodity("crew", Continuity.DISCRETE, "count"),
    Commodity("vehicle", Continuity.DISCRETE, "count"),
    Commodity("propellant", Continuity.CONTINUOUS, "kg"),
    Commodity("habitat", Continuity.CONTINUOUS, "kg"),
    Commodity("isru_plant", Continuity.CONTINUOUS, "kg"),
    Commodity("sample", Continuity.CONTINUOUS, "kg"),
    Commodity("maintenance", Continuity.CONTINUOUS, "kg"),
    Commodity("consumables", Continuity.CONTINUOUS, "kg"),
)
COMMODITY_IDS: tuple[str, ...] = tuple(c.id for c in COMMODITIES)
CIDX: dict[str, int] = {c: i for i, c in enumerate(COMMODITY_IDS)}
NCOM = len(COMMODITIES)
CREW, VEHICLE, PROP, HABITAT, PLANT, SAMPLE, MAINT, CONS = range(NCOM)
MASS_COMMODITIES = (PROP, HABITAT, PLANT, SAMPLE, MAINT, CONS)
PAYLOAD_COMMODITIES = (HABITAT, PLANT, SAMPLE, MAINT, CONS)


class ScenarioError(ValueError):
    """Scenario file or object fails validation."""

    def __init__(self, violations: Iterable[str] | str):
        self.violations = [violations] if isinstance(violations, str) else list(violations)
        super().__init__("; ".join(self.violations))


class ArcKind(str, Enum):
    TRANSPORT = "transport"
    HOLDOVER = "holdover"


@dataclass(frozen=True)
class NodeSpec:
    id: str
    infinite_supply: frozenset[str] = frozenset()
    dwell: bool = True
    launch: bool = False


@dataclass(frozen=True)
class ArcSpec:
    src: str
    dst: str
    delta_v: float
    tof: int
    kind: ArcKind = ArcKind.TRANSPORT
    windows: tuple[tuple[float, float], ...] = ()

    @property
    def label(self) -> str:
        return f"{self.src}->{self.dst}"

    def admits(self, day: float) -> bool:
        return any(a <= day <= b for a, b in self.windows)


@dataclass(frozen=True)
class DemandEntry:
    """One signed supply (+) or demand (-) entry.

    ``amount`` is a number or a symbol resolved against the scenario:
    ``crew`` (the crew count), ``habitat`` (habitat mass) and
    ``sample`` (sample return mass), optionally prefixed by ``-``.
    """

    node: str
    day: float
    commodity: str
    amount: float | str


@dataclass(frozen=True)
class TruncNormal:
    """Normal distribution truncated below at zero."""

    mean: float
    sd: float


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    missions: int
    crew_count: int
    habitat_mass_kg: float
    isru_production: TruncNormal
    isru_decay_pct: TruncNormal
    nodes: tuple[NodeSpec, ...]
    arcs: tuple[ArcSpec, ...]
    demands: tuple[DemandEntry, ...]
    cycle_length_days: float = 365.0
    isru_deploy_cap_kg: float = 5000.0
    fleet_size: int = 4
    isp: float = 420.0
    crew_mass_kg: float = 100.0
    crew_consumption_kg_day: float = 8.655
    vehicle_maint_rate: float = 0.01
    isru_maint_rate: float = 0.05
    sample_return_kg: float = 2500.0
    electrolysis_efficiency: float = 1.0
    isru_node: str = "Moon"
    isru_deploy_day: float = 357.0
    sizing: tuple[float, float, float] = (0.0, 2.39334, 0.120543)
    tank_fraction: float = 0.079
    payload_range_kg: tuple[float, float] = (2000.0, 10000.0)
    propellant_range_kg: tuple[float, float] = (40000.0, 200000.0)
    grid_points: tuple[int, int] = (33, 33)
    description: str = ""

    # -- helpers ---------------------------------------------------------
    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def transport_arcs(self) -> tuple[ArcSpec, ...]:
        return tuple(a for a in self.arcs if a.kind == ArcKind.TRANSPORT)

    def dwell_nodes(self) -> tuple[str, ...]:
        declared = {a.src for a in self.arcs if a.kind == ArcKind.HOLDOVER}
        return tuple(n.id for n in self.nodes if n.dwell or n.id in declared)

    def resolve_amount(self, amount: float | str) -> float:
        if not isinstance(amount, str):
            return float(amount)
        s = amount.strip()
        sign = -1.0 if s.startswith("-") else 1.0
        key = s.lstrip("+-").strip()
        table = {"crew": float(self.crew_count), "habitat": float(self.habitat_mass_kg),
                 "sample": float(self.sample_return_kg)}
        if key not in table:
            raise ScenarioError(f"demands: unknown symbolic amount {amount!r}")
        return sign * table[key]

    def resolved_demands(self) -> list[tuple[str, float, str, float]]:
        return [(d.node, float(d.day), d.commodity, self.resolve_amount(d.amount))
                for d in self.demands]

    def replace(self, **changes: Any) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return _to_plain(self)

    def digest(self) -> str:
        """Stable content hash, used to key memoized baselines."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (frozenset, set)):
        return sorted(obj)
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------
def validate_scenario(sc: ScenarioSpec) -> list[str]:
    """Return a list of violations, each prefixed by the offending field path.

    An empty list means the scenario is valid.
    """
    v: list[str] = []
    if not isinstance(sc.missions, (int, np.integer)) or sc.missions < 1:
        v.append(f"missions: must be an integer >= 1, got {sc.missions!r}")
    nonneg = {
        "crew_count": sc.crew_count, "habitat_mass_kg": sc.habitat_mass_kg,
        "isru_deploy_cap_kg": sc.isru_deploy_cap_kg, "fleet_size": sc.fleet_size,
        "crew_mass_kg": sc.crew_mass_kg, "crew_consumption_kg_day": sc.crew_consumption_kg_day,
        "vehicle_maint_rate": sc.vehicle_maint_rate, "isru_maint_rate": sc.isru_maint_rate,
        "sample_return_kg": sc.sample_return_kg, "electrolysis_efficiency": sc.electrolysis_efficiency,
        "isru_production.mean": sc.isru_production.mean, "isru_production.sd": sc.isru_production.sd,
        "isru_decay_pct.mean": sc.isru_decay_pct.mean, "isru_decay_pct.sd": sc.isru_decay_pct.sd,
        "tank_fraction": sc.tank_fraction,
    }
    for k, val in nonneg.items():
        if not np.isfinite(val) or val < 0:
            v.append(f"{k}: must be finite and nonnegative, got {val!r}")
    if not sc.isp > 0:
        v.append(f"isp: must be positive, got {sc.isp!r}")
    if not sc.cycle_length_days > 0:
        v.append(f"cycle_length_days: must be positive, got {sc.cycle_length_days!r}")
    c0, c1, c2 = sc.sizing
    if c0 < 0 or c1 < 0 or c2 < 0:
        v.append(f"sizing: coefficients must be nonnegative, got {sc.sizing!r}")
    for key, (lo, hi) in (("payload_range_kg", sc.payload_range_kg),
                          ("propellant_range_kg", sc.propellant_range_kg)):
        if not 0 <= lo <= hi:
            v.append(f"{key}: need 0 <= low <= high, got {(lo, hi)!r}")
    if min(sc.grid_points) < 1:
        v.append(f"grid_points: need at least one point per axis, got {sc.grid_points!r}")

    ids = [n.id for n in sc.nodes]
    seen: set[str] = set()
    for i, nid in enumerate(ids):
        if nid in seen:
            v.append(f"nodes[{i}].id: duplicate node id {nid!r}")
        seen.add(nid)
    for i, n in enumerate(sc.nodes):
        for c in n.infinite_supply:
            if c not in CIDX:
                v.append(f"nodes[{i}].infinite_supply: unknown commodity {c!r}")
    if sc.isru_node not in seen:
        v.append(f"isru_node: unknown node {sc.isru_node!r}")

    for i, a in enumerate(sc.arcs):
        p = f"arcs[{i}]"
        for end, nid in (("src", a.src), ("dst", a.dst)):
            if nid not in seen:
                v.append(f"{p}.{end}: unknown node {nid!r}")
        if a.delta_v < 0 or not np.isfinite(a.delta_v):
            v.append(f"{p}.delta_v: must be finite and nonnegative, got {a.delta_v!r}")
        if a.tof < 0 or int(a.tof) != a.tof:
            v.append(f"{p}.tof: must be a whole number of days >= 0, got {a.tof!r}")
        if a.kind == ArcKind.HOLDOVER:
            if a.src != a.dst:
                v.append(f"{p}.kind: holdover arc must start and end at the same node")
            if a.delta_v != 0:
                v.append(f"{p}.kind: holdover arc must have delta_v = 0, got {a.delta_v!r}")
        elif a.src == a.dst:
            v.append(f"{p}.kind: transport arc must connect two different nodes")
        ws = sorted(a.windows)
        for k, (lo, hi) in enumerate(ws):
            if lo > hi:
                v.append(f"{p}.windows[{k}]: start {lo} after end {hi}")
            if lo < 0 or hi > sc.cycle_length_days:
                v.append(f"{p}.windows[{k}]: window {(lo, hi)} of arc {a.label} extends past "
                         f"the cycle [0, {sc.cycle_length_days}]")
            if k and lo <= ws[k - 1][1]:
                v.append(f"{p}.windows: windows {ws[k - 1]} and {(lo, hi)} overlap")

    supply_nodes = {n.id for n in sc.nodes if n.infinite_supply or n.launch}
    reach = _reachable(sc, supply_nodes | {d.node for d in sc.demands
                                           if _is_positive(sc, d.amount)})
    for i, d in enumerate(sc.demands):
        p = f"demands[{i}]"
        if d.node not in seen:
            v.append(f"{p}.node: unknown node {d.node!r}")
        if d.commodity not in CIDX:
            v.append(f"{p}.commodity: unknown commodity {d.commodity!r}")
        if not 0 <= d.day <= sc.cycle_length_days:
            v.append(f"{p}.day: {d.day} outside [0, {sc.cycle_length_days}]")
        try:
            amt = sc.resolve_amount(d.amount)
        except ScenarioError as e:
            v.append(f"{p}.amount: {e}")
            continue
        if not np.isfinite(amt):
            v.append(f"{p}.amount: must be finite")
        if amt < 0 and d.node in seen and d.node not in reach:
            v.append(f"{p}: demand at {d.node!r} has no upstream supply path")
    return v


def _is_positive(sc: ScenarioSpec, amount) -> bool:
    try:
        return sc.resolve_amount(amount) > 0
    except ScenarioError:
        return False


def _reachable(sc: ScenarioSpec, sources: set[str]) -> set[str]:
    out = set(sources)
    changed = True
    while changed:
        changed = False
        for a in sc.arcs:
            if a.src in out and a.dst not in out:
                out.add(a.dst)
                changed = True
    return out


def check_scenario(sc: ScenarioSpec) -> ScenarioSpec:
    v = validate_scenario(sc)
    if v:
        raise ScenarioError(v)
    return sc


# ---------------------------------------------------------------------------
# time grid and expansion
# ---------------------------------------------------------------------------
def build_time_grid(sc: ScenarioSpec) -> list[float]:
    """Event days of one mission cycle.

    The grid is the union of window boundaries, demand days, and the arrival
    day of every departure the windows admit; arrivals are fed back as
    potential departures until closure.  Arrivals after the cycle end are
    dropped (such departures are not admissible).
    """
    L = float(sc.cycle_length_days)
    bad = [f"arcs[{i}].windows: window {w} of arc {a.label} extends past the cycle [0, {L}]"
           for i, a in enumerate(sc.arcs) for w in a.windows if w[0] < 0 or w[1] > L]
    if bad:
        raise ScenarioError(bad)
    events: set[float] = set()
    for a in sc.arcs:
        for lo, hi in a.windows:
            events.update((float(lo), float(hi)))
    events.update(float(d.day) for d in sc.demands)
    frontier = sorted(events)
    while frontier:
        new: set[float] = set()
        for t in frontier:
            for a in sc.transport_arcs:
                if a.admits(t):
                    arr = t + a.tof
                    if arr <= L and arr not in events:
                        new.add(arr)
        events |= new
        frontier = sorted(new)
    return sorted(events)


@dataclass(frozen=True)
class ExpandedArc:
    vehicle: int
    arc: int
    src: str
    dst: str
    t: float
    t_arr: float


@dataclass(frozen=True)
class HoldoverArc:
    node: str
    t: float
    t_next: float

    @property
    def duration(self) -> float:
        return self.t_next - self.t


@dataclass(frozen=True)
class TimeExpandedNetwork:
    scenario: ScenarioSpec
    time_steps: tuple[float, ...]
    expanded_arcs: tuple[ExpandedArc, ...]
    holdover_arcs: tuple[HoldoverArc, ...]
    node_time_index: Mapping[tuple[str, float], np.ndarray] = field(repr=False)

    def transport_steps(self) -> list[tuple[int, float]]:
        """Distinct (arc index, departure day) pairs, in expansion order."""
        seen, out = set(), []
        for e in self.expanded_arcs:
            k = (e.arc, e.t)
            if k not in seen:
                seen.add(k)
                out.append(k)
        return out

    def admissible_steps(self, sc_arc: int) -> list[float]:
        return _admissible(self.scenario.arcs[sc_arc], self.time_steps, self.scenario.cycle_length_days)

    def demand(self, node: str, t: float) -> np.ndarray:
        return self.node_time_index.get((node, t), np.zeros(NCOM))


def _admissible(arc: ArcSpec, grid: Iterable[float], L: float) -> list[float]:
    gs = set(grid)
    return [t for t in grid if arc.admits(t) and t + arc.tof <= L and (t + arc.tof) in gs]


def expand_network(sc: ScenarioSpec, vehicles: int | None = None) -> TimeExpandedNetwork:
    """Expand one cycle of ``sc`` into per-vehicle transport arcs plus holdovers.

    ``vehicles`` defaults to the scenario fleet size.
    """
    grid = build_time_grid(sc)
    nv = sc.fleet_size if vehicles is None else vehicles
    arcs: list[ExpandedArc] = []
    for ai, a in enumerate(sc.arcs):
        if a.kind != ArcKind.TRANSPORT:
            continue
        for t in _admissible(a, grid, sc.cycle_length_days):
            for v in range(nv):
                arcs.append(ExpandedArc(v, ai, a.src, a.dst, t, t + a.tof))
    holds = [HoldoverArc(n, t0, t1) for n in sc.dwell_nodes() for t0, t1 in zip(grid, grid[1:])]
    idx: dict[tuple[str, float], np.ndarray] = {}
    for node, day, com, amt in sc.resolved_demands():
        vec = idx.setdefault((node, day), np.zeros(NCOM))
        vec[CIDX[com]] += amt
    for vec in idx.values():
        vec.setflags(write=False)
    return TimeExpandedNetwork(sc, tuple(grid), tuple(arcs), tuple(holds), idx)


# ---------------------------------------------------------------------------
# file loading
# ---------------------------------------------------------------------------
_SCALARS = {f.name for f in dataclasses.fields(ScenarioSpec)} - {
    "nodes", "arcs", "demands", "isru_production", "isru_decay_pct", "sizing",
    "payload_range_kg", "propellant_range_kg", "grid_points"}


def scenario_from_dict(doc: Mapping[str, Any]) -> ScenarioSpec:
    try:
        nodes = tuple(NodeSpec(str(n["id"]), frozenset(n.get("infinite_supply", ()) or ()),
                               bool(n.get("dwell", True)), bool(n.get("launch", False)))
                      for n in doc["nodes"])
        arcs = tuple(ArcSpec(str(a["from"]), str(a["to"]), float(a.get("delta_v", 0.0)),
                             a.get("tof", 0), ArcKind(a.get("kind", "transport")),
                             tuple((float(w[0]), float(w[1])) for w in a.get("windows", ())))
                     for a in doc.get("arcs", ()) or ())
        demands = tuple(DemandEntry(str(d["node"]), float(d["day"]), str(d["commodity"]),
                                    d["amount"])
                        for d in doc.get("demands", ()) or ())
        kw = {k: doc[k] for k in _SCALARS if k in doc}
        for k in ("payload_range_kg", "propellant_range_kg", "sizing", "grid_points"):
            if k in doc:
                kw[k] = tuple(doc[k])
        prod = doc["isru_production"]
        dec = doc["isru_decay_pct"]
        return ScenarioSpec(
            nodes=nodes, arcs=arcs, demands=demands,
            isru_production=TruncNormal(float(prod["mean"]), float(prod["sd"])),
            isru_decay_pct=TruncNormal(float(dec["mean"]), float(dec["sd"])),
            **kw,
        )
    except KeyError as e:
        raise ScenarioError(f"{e.args[0]}: required field missing") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {e}") from None


def _deep_merge(base: dict, over: Mapping) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _deep_merge(dict(out[k]), v)
        else:
            out[k] = v
    return out


def _read_doc(path: Path, _depth: int = 0) -> dict:
    if _depth > 8:
        raise ScenarioError(f"{path}: base chain too deep")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except yaml.YAMLError as e:
        raise ScenarioError(f"{path}: not valid YAML ({e})") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    ver = doc.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version: expected {SCHEMA_VERSION}, got {ver!r} in {path}")
    if "base" in doc:
        base = _read_doc((path.parent / doc["base"]).resolve(), _depth + 1)
        body = {k: v for k, v in doc.items() if k not in ("base", "overrides")}
        merged = _deep_merge(base, doc.get("overrides", {}) or {})
        return _deep_merge(merged, body)
    return doc


def load_scenario(path: str | Path, validate: bool = True) -> ScenarioSpec:
    """Load a scenario file; a bare name like ``D`` resolves to a shipped file."""
    p = Path(path)
    if not p.exists():
        shipped = data_path(str(path))
        if shipped is None:
            raise FileNotFoundError(f"scenario file not found: {path}")
        p = shipped
    sc = scenario_from_dict(_read_doc(p))
    return check_scenario(sc) if validate else sc


def data_path(name: str) -> Path | None:
    root = Path(str(resources.files("hrlcampaign") / "data"))
    for cand in (name, f"{name}.yaml", f"scenario_{name}.yaml"):
        p = root / cand
        if p.is_file():
            return p
    return None


def shipped_scenarios() -> list[str]:
    root = Path(str(resources.files("hrlcampaign") / "data"))
    return sorted(p.stem.removeprefix("scenario_") for p in root.glob("scenario_*.yaml"))
