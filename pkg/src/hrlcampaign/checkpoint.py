"""Versioned JSON checkpoints holding everything needed to resume or evaluate a run."""
from __future__ import annotations

import json
from pathlib import Path

from . import __version__
from .campaign import TrainConfig
from .rl import ReplayBuffer, Td3Config, algorithm_from_dict
from .vfa import VfaParameters

FORMAT = "hrlcampaign-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def config_to_dict(cfg: TrainConfig) -> dict:
    agent = {**cfg.agent.__dict__, "hidden": list(cfg.agent.hidden)}
    return {"episodes": cfg.episodes, "n1": cfg.n1, "n2": cfg.n2, "seed": cfg.seed,
            "updates_per_step": cfg.updates_per_step, "agent": agent}


def config_from_dict(d: dict) -> TrainConfig:
    agent = dict(d["agent"])
    agent["hidden"] = tuple(agent["hidden"])
    return TrainConfig(d["episodes"], d["n1"], d["n2"], d["seed"], Td3Config(**agent),
                       d.get("updates_per_step", 1))


def save(path: str | Path, *, scenario, agent, vfa: VfaParameters, config: TrainConfig,
         buffer: ReplayBuffer | None = None, rng_state: dict | None = None,
         baseline_kg: float | None = None) -> Path:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "package_version": __version__,
        "scenario": {"name": scenario.name, "digest": scenario.digest()},
        "baseline_kg": baseline_kg,
        "config": config_to_dict(config),
        "agent": agent.to_dict(),
        "vfa": vfa.to_dict(),
        "buffer": buffer.to_dict() if buffer is not None else None,
        "rng_state": rng_state or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return path


class Checkpoint:
    def __init__(self, doc: dict):
        self.doc = doc
        self.agent = algorithm_from_dict(doc["agent"])
        self.vfa = VfaParameters.from_dict(doc["vfa"])
        self.config = config_from_dict(doc["config"])
        self.buffer = ReplayBuffer.from_dict(doc["buffer"]) if doc.get("buffer") else None
        self.scenario_digest = doc["scenario"]["digest"]
        self.scenario_name = doc["scenario"]["name"]
        self.baseline_kg = doc.get("baseline_kg")
        self.rng_state = doc.get("rng_state", {})


def load(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: not a JSON checkpoint ({e})") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not an {FORMAT} file")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"{path}: checkpoint version {doc.get('version')!r}, expected {VERSION}")
    try:
        return Checkpoint(doc)
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"{path}: malformed checkpoint ({e})") from None
