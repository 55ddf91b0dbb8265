"""Twin-critic deterministic policy gradient agent with delayed actor updates.

Actions live in ``[-1, 1]`` inside the networks and are mapped affinely to a
deployment mass in ``[0, cap]`` at the boundary.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from .buffer import ReplayBuffer
from .nets import Adam, Mlp


@dataclass(frozen=True)
class Td3Config:
    hidden: tuple[int, ...] = (256, 256)
    lr: float = 4e-4
    batch_size: int = 64
    buffer_size: int = 1500
    tau: float = 0.005
    gamma: float = 0.95
    policy_delay: int = 2
    expl_noise: float = 0.1
    target_noise: float = 0.2
    noise_clip: float = 0.5

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @classmethod
    def desk(cls, **kw) -> "Td3Config":
        return cls(hidden=(32, 32), **kw)


class Algorithm(Protocol):
    """What the campaign loop needs from an infrastructure deployment learner."""

    cap: float

    def select_action(self, state: np.ndarray, explore: bool, rng: np.random.Generator) -> float: ...

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> dict: ...

    def to_dict(self) -> dict: ...


def soft_update(target: Mlp, main: Mlp, tau: float) -> None:
    for pt, pm in zip(target.params, main.params):
        pt *= 1.0 - tau
        pt += tau * pm


@dataclass
class Td3Agent:
    state_dim: int
    cap: float
    config: Td3Config = field(default_factory=Td3Config)
    actor: Mlp | None = None
    critics: list[Mlp] = field(default_factory=list)
    actor_target: Mlp | None = None
    critic_targets: list[Mlp] = field(default_factory=list)
    actor_opt: Adam | None = None
    critic_opts: list[Adam] = field(default_factory=list)
    updates: int = 0

    @classmethod
    def create(cls, state_dim: int, cap: float, config: Td3Config | None = None,
               rng: np.random.Generator | None = None) -> "Td3Agent":
        cfg = config or Td3Config()
        rng = rng or np.random.default_rng(0)
        h = tuple(cfg.hidden)
        actor = Mlp.init((state_dim, *h, 1), rng, output="tanh")
        critics = [Mlp.init((state_dim + 1, *h, 1), rng) for _ in range(2)]
        return cls(state_dim, float(cap), cfg, actor, critics, actor.copy(),
                   [c.copy() for c in critics], Adam(cfg.lr), [Adam(cfg.lr), Adam(cfg.lr)])

    # ---- action mapping -------------------------------------------------
    def to_mass(self, u: np.ndarray | float) -> np.ndarray | float:
        return self.cap * (np.clip(u, -1.0, 1.0) + 1.0) / 2.0

    def to_unit(self, a: np.ndarray | float) -> np.ndarray | float:
        return 2.0 * np.asarray(a, float) / self.cap - 1.0 if self.cap > 0 else np.zeros_like(a)

    def policy(self, state: np.ndarray) -> np.ndarray:
        return self.actor.forward(state)

    def select_action(self, state: np.ndarray, explore: bool, rng: np.random.Generator) -> float:
        u = float(self.actor.forward(np.asarray(state, float)[None, :])[0, 0])
        if explore:
            u += self.config.expl_noise * rng.standard_normal()
        return float(self.to_mass(u))

    # ---- learning ---------------------------------------------------------
    def critic_targets_for(self, r, s2, done, rng: np.random.Generator | None) -> np.ndarray:
        cfg = self.config
        u2 = self.actor_target.forward(s2)
        if rng is not None and cfg.target_noise > 0:
            eps = np.clip(cfg.target_noise * rng.standard_normal(u2.shape), -cfg.noise_clip,
                          cfg.noise_clip)
            u2 = np.clip(u2 + eps, -1.0, 1.0)
        x2 = np.hstack([s2, u2])
        q1 = self.critic_targets[0].forward(x2)[:, 0]
        q2 = self.critic_targets[1].forward(x2)[:, 0]
        return r + cfg.gamma * (1.0 - done) * np.minimum(q1, q2)

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator,
               batch_size: int | None = None) -> dict:
        """One critic step on both critics; actor and targets every ``policy_delay`` calls."""
        cfg = self.config
        bs = batch_size or cfg.batch_size
        if len(buffer) < bs:
            raise ValueError(f"buffer holds {len(buffer)} transitions, batch needs {bs}")
        s, a, r, s2, done = buffer.sample(bs, rng)
        u = self.to_unit(a)
        y = self.critic_targets_for(r, s2, done, rng)
        x = np.hstack([s, u])
        info = {}
        for k, (critic, opt) in enumerate(zip(self.critics, self.critic_opts)):
            q = critic.forward(x)[:, 0]
            err = q - y
            info[f"critic{k + 1}_loss"] = float(np.mean(err ** 2))
            grads = critic.gradients(x, (2.0 * err / bs)[:, None])
            opt.step(critic.params, grads)
        self.updates += 1
        if self.updates % cfg.policy_delay == 0:
            info["actor_loss"] = self._actor_step(s)
            soft_update(self.actor_target, self.actor, cfg.tau)
            for t, c in zip(self.critic_targets, self.critics):
                soft_update(t, c, cfg.tau)
        return info

    def _actor_step(self, s: np.ndarray) -> float:
        bs = len(s)
        u, acts = self.actor.forward(s, cache=True)
        x = np.hstack([s, u])
        q = self.critics[0].forward(x)
        _, gx = self.critics[0].backward(x, np.full((bs, 1), -1.0 / bs))
        grads = self.actor.gradients(s, gx[:, -1:])
        self.actor_opt.step(self.actor.params, grads)
        return float(-q.mean())

    # ---- persistence -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": "td3", "state_dim": self.state_dim, "cap": self.cap,
            "config": {**asdict(self.config), "hidden": list(self.config.hidden)},
            "actor": self.actor.to_dict(), "critics": [c.to_dict() for c in self.critics],
            "actor_target": self.actor_target.to_dict(),
            "critic_targets": [c.to_dict() for c in self.critic_targets],
            "actor_opt": self.actor_opt.to_dict(),
            "critic_opts": [o.to_dict() for o in self.critic_opts], "updates": self.updates,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Td3Agent":
        cfg = dict(d["config"])
        cfg["hidden"] = tuple(cfg["hidden"])
        return cls(d["state_dim"], d["cap"], Td3Config(**cfg), Mlp.from_dict(d["actor"]),
                   [Mlp.from_dict(c) for c in d["critics"]], Mlp.from_dict(d["actor_target"]),
                   [Mlp.from_dict(c) for c in d["critic_targets"]], Adam.from_dict(d["actor_opt"]),
                   [Adam.from_dict(o) for o in d["critic_opts"]], d["updates"])


ALGORITHMS = {"td3": Td3Agent}


def algorithm_from_dict(d: dict):
    kind = d.get("kind")
    if kind not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {kind!r}; available: {sorted(ALGORITHMS)}")
    return ALGORITHMS[kind].from_dict(d)
