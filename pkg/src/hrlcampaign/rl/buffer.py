"""Fixed-capacity ring buffer of transitions with uniform sampling."""
from __future__ import annotations

import numpy as np


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int, action_dim: int = 1):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self.ptr = 0

    def __len__(self) -> int:
        return self.size

    def push(self, s, a, r, s2, done) -> None:
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self.size, size=n)

    def sample(self, n: int, rng: np.random.Generator):
        i = self.sample_indices(n, rng)
        return self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i]

    def to_dict(self) -> dict:
        k = self.size
        return {"capacity": self.capacity, "size": k, "ptr": self.ptr, "state_dim": self.s.shape[1],
                "action_dim": self.a.shape[1], "s": self.s[:k].tolist(),
                "a": self.a[:k].tolist(), "r": self.r[:k].tolist(), "s2": self.s2[:k].tolist(),
                "done": self.done[:k].tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ReplayBuffer":
        sd, ad = int(d["state_dim"]), int(d["action_dim"])
        s = np.asarray(d["s"], float).reshape(d["size"], sd)
        a = np.asarray(d["a"], float).reshape(d["size"], ad)
        buf = cls(d["capacity"], sd, ad)
        k = d["size"]
        buf.s[:k], buf.a[:k], buf.r[:k] = s, a, d["r"]
        buf.s2[:k] = np.asarray(d["s2"], float).reshape(k, -1)
        buf.done[:k] = d["done"]
        buf.size, buf.ptr = k, d["ptr"]
        return buf
