"""Linear value-function approximation for the vehicle design agent.

The value of a design is ``theta . [payload/s1, propellant/s2, 1]``; it
estimates the cost of missions 2..Gamma and is refined by recursive least
squares after every training episode.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class VfaError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    payload_scale: float = 5000.0
    propellant_scale: float = 150000.0
    names: tuple[str, ...] = ("payload", "propellant", "bias")

    def __post_init__(self):
        if not (self.payload_scale > 0 and self.propellant_scale > 0):
            raise VfaError("feature scales must be positive")

    @property
    def dim(self) -> int:
        return 3


@dataclass(frozen=True)
class VfaParameters:
    theta: np.ndarray
    Binv: np.ndarray
    spec: FeatureSpec = field(default_factory=FeatureSpec)
    updates: int = 0

    def __post_init__(self):
        d = self.spec.dim
        if self.theta.shape != (d,) or self.Binv.shape != (d, d):
            raise VfaError(f"theta {self.theta.shape} / Binv {self.Binv.shape} do not match "
                           f"feature dimension {d}")

    @classmethod
    def initial(cls, spec: FeatureSpec | None = None, b0: float = 1e6) -> "VfaParameters":
        spec = spec or FeatureSpec()
        return cls(np.zeros(spec.dim), b0 * np.eye(spec.dim), spec, 0)

    def to_dict(self) -> dict:
        return {"theta": self.theta.tolist(), "Binv": self.Binv.tolist(), "updates": self.updates,
                "payload_scale": self.spec.payload_scale,
                "propellant_scale": self.spec.propellant_scale}

    @classmethod
    def from_dict(cls, d: dict) -> "VfaParameters":
        spec = FeatureSpec(d["payload_scale"], d["propellant_scale"])
        return cls(np.asarray(d["theta"], float), np.asarray(d["Binv"], float), spec,
                   int(d["updates"]))


def features(design, spec: FeatureSpec | None = None) -> np.ndarray:
    """``[payload/s1, propellant/s2, 1]`` for a design or a (payload, propellant) pair."""
    spec = spec or FeatureSpec()
    if hasattr(design, "payload_kg"):
        p, f = design.payload_kg, design.propellant_kg
    else:
        p, f = design[0], design[1]
    return np.array([p / spec.payload_scale, f / spec.propellant_scale, 1.0])


def predict(params: VfaParameters, design) -> float:
    return float(params.theta @ features(design, params.spec))


def rls_update(params: VfaParameters, design, observed_cost: float) -> VfaParameters:
    """One recursive least-squares step toward ``observed_cost``."""
    if not np.isfinite(observed_cost):
        raise VfaError(f"observed cost must be finite, got {observed_cost}")
    a = features(design, params.spec)
    if not np.all(np.isfinite(a)):
        raise VfaError("design features must be finite")
    B = params.Binv
    Ba = B @ a
    B_new = B - np.outer(Ba, a @ B) / (1.0 + a @ Ba)
    B_new = 0.5 * (B_new + B_new.T)
    theta = params.theta - B_new @ a * (params.theta @ a - observed_cost)
    return replace(params, theta=theta, Binv=B_new, updates=params.updates + 1)


def batch_fit(history, spec: FeatureSpec | None = None) -> np.ndarray:
    """Normal-equations solution over ``(design, cost)`` pairs."""
    spec = spec or FeatureSpec()
    A = np.array([features(d, spec) for d, _ in history], dtype=float).reshape(-1, spec.dim)
    y = np.array([c for _, c in history], dtype=float)
    G = A.T @ A
    # rank test on the column-scaled matrix so scale differences do not matter
    norms = np.sqrt(np.diag(G))
    for k, nm in enumerate(spec.names):
        if norms[k] == 0:
            raise VfaError(f"feature {nm!r} is identically zero; normal equations are singular")
    Gs = G / np.outer(norms, norms)
    w, V = np.linalg.eigh(Gs)
    if w[0] < 1e-12 * w[-1]:
        k = int(np.argmax(np.abs(V[:, 0])))
        raise VfaError(f"history is rank deficient; feature {spec.names[k]!r} is linearly "
                       f"dependent on the others")
    return np.linalg.solve(G, A.T @ y)
