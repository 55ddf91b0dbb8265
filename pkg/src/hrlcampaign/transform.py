"""Commodity transformation (Q) and concurrency (H) blocks for network arcs.

Every block acts on an *augmented* outflow vector

    z = [crew, vehicle, propellant, habitat, isru_plant, sample, maintenance,
         consumables, dryload, paycap, propcap]

where the last three entries are the vehicle-count-weighted dry mass,
payload capacity and propellant capacity of the vehicles on the arc
(``D*n``, ``P*n``, ``F*n``).  Keeping the design products as separate entries
lets the scheduler substitute either constants (fixed design) or linearized
product variables (design optimization) without touching this module.

Masses are expressed in ``mass_unit`` kilograms (1 for kg, 1000 for tonnes);
crew and vehicle entries stay head counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netmodel import (CONS, CREW, HABITAT, MAINT, NCOM, PLANT, PROP, SAMPLE, VEHICLE, ArcSpec,
                       NodeSpec, ScenarioSpec)

G0 = 9.80665
DRY, PAYCAP, PROPCAP = NCOM, NCOM + 1, NCOM + 2
NZ = NCOM + 3
DAYS_PER_YEAR = 365.0


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class StochasticParams:
    """ISRU production rate (kg water / yr / kg plant) and decay (fraction / yr)."""

    production: float = 0.0
    decay: float = 0.0

    def __post_init__(self):
        if not (self.production >= 0 and self.decay >= 0):
            raise DomainError(f"stochastic parameters must be nonnegative, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.production, self.decay])


@dataclass(frozen=True)
class ConcurrencyBlock:
    """Rows ``H z <= 0``; ``names`` labels each row."""

    H: np.ndarray
    names: tuple[str, ...] = ()

    def residual(self, z: np.ndarray) -> np.ndarray:
        return self.H @ z if len(self.H) else np.zeros(0)


@dataclass(frozen=True)
class ArcTransform:
    """Head inflow = ``(Q + G) z``; ``G`` holds the nonnegative generation terms."""

    Q: np.ndarray
    G: np.ndarray
    concurrency: ConcurrencyBlock = field(default_factory=lambda: ConcurrencyBlock(np.zeros((0, NZ))))

    @property
    def M(self) -> np.ndarray:
        return self.Q + self.G

    def apply(self, z: np.ndarray) -> np.ndarray:
        return self.M @ z


def mass_ratio(delta_v: float, isp: float) -> float:
    if isp <= 0:
        raise DomainError(f"isp must be positive, got {isp}")
    if delta_v < 0:
        raise DomainError(f"delta_v must be nonnegative, got {delta_v}")
    return math.exp(delta_v / (isp * G0))


def augment(x: np.ndarray, dry: float, paycap: float, propcap: float) -> np.ndarray:
    """Build ``z`` from commodity flows and per-vehicle design values."""
    n = x[VEHICLE]
    return np.concatenate([x, [dry * n, paycap * n, propcap * n]])


def burn_fraction(arc: ArcSpec, isp: float) -> float:
    return 1.0 - 1.0 / mass_ratio(arc.delta_v, isp)


def transport_transform(arc: ArcSpec, sc: ScenarioSpec,
                        mass_unit: float = 1.0) -> tuple[ArcTransform, ConcurrencyBlock]:
    """Q/H blocks for a transport arc.

    The vehicle design enters only through the augmented entries of ``z``, so
    one block serves every design.
    """
    k = burn_fraction(arc, sc.isp)
    crew_m = sc.crew_mass_kg / mass_unit
    eat = sc.crew_consumption_kg_day * arc.tof / mass_unit
    mr = sc.vehicle_maint_rate

    # burned propellant as a row over z
    burn = np.zeros(NZ)
    burn[DRY] = k
    burn[CREW] = k * crew_m
    for c in (PROP, HABITAT, PLANT, SAMPLE, MAINT, CONS):
        burn[c] = k

    Q = np.zeros((NCOM, NZ))
    for c in range(NCOM):
        Q[c, c] = 1.0
    Q[PROP] -= burn
    Q[CONS, CREW] -= eat
    Q[MAINT, DRY] -= mr

    H = np.zeros((5, NZ))
    H[0, PROP], H[0, PROPCAP] = 1.0, -1.0
    H[1, CREW] = crew_m
    for c in (HABITAT, PLANT, SAMPLE, MAINT, CONS):
        H[1, c] = 1.0
    H[1, PAYCAP] = -1.0
    H[2] = burn
    H[2, PROP] -= 1.0
    H[3, CREW], H[3, CONS] = eat, -1.0
    H[4, DRY], H[4, MAINT] = mr, -1.0
    names = ("propellant_capacity", "payload_capacity", "burn", "consumables", "maintenance")
    return ArcTransform(Q, np.zeros((NCOM, NZ))), ConcurrencyBlock(H, names)


def holdover_transform(node: NodeSpec | str, duration_days: float, q: StochasticParams,
                       sc: ScenarioSpec, mass_unit: float = 1.0) -> ArcTransform:
    """Dwell at ``node`` for ``duration_days``.

    At the ISRU node the plant decays multiplicatively, produces propellant
    from its start-of-period mass, and requires accompanying maintenance mass.
    Everywhere else the transform is the identity.
    """
    if duration_days < 0:
        raise DomainError(f"duration must be nonnegative, got {duration_days}")
    if q.production < 0 or q.decay < 0:
        raise DomainError(f"stochastic parameters must be nonnegative, got {q}")
    if q.decay > 1:
        raise DomainError(f"decay fraction must be at most 1, got {q.decay}")
    nid = node if isinstance(node, str) else node.id
    Q = np.zeros((NCOM, NZ))
    Q[:, :NCOM] = np.eye(NCOM)
    G = np.zeros((NCOM, NZ))
    if nid != sc.isru_node:
        return ArcTransform(Q, G)
    yrs = duration_days / DAYS_PER_YEAR
    Q[PLANT, PLANT] = (1.0 - q.decay) ** yrs
    G[PROP, PLANT] = q.production * sc.electrolysis_efficiency * yrs
    H = np.zeros((1, NZ))
    H[0, PLANT] = sc.isru_maint_rate * yrs
    H[0, MAINT] = -1.0
    return ArcTransform(Q, G, ConcurrencyBlock(H, ("isru_maintenance",)))
