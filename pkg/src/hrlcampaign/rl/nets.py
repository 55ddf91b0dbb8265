"""Small fully connected networks with exact reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    pass


@dataclass
class Mlp:
    """ReLU hidden layers; the output is linear or ``tanh``-squashed.

    Parameters are stored as a list ``[W0, b0, W1, b1, ...]`` with
    ``W_k`` of shape ``(fan_in, fan_out)``.
    """

    sizes: tuple[int, ...]
    output: str = "linear"
    params: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.output not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {self.output!r}")
        if len(self.sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if not self.params:
            self.params = [p for a, b in zip(self.sizes, self.sizes[1:])
                           for p in (np.zeros((a, b)), np.zeros(b))]

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, output: str = "linear",
             final_scale: float = 3e-3) -> "Mlp":
        """Uniform fan-in initialization; the last layer starts near zero."""
        params = []
        pairs = list(zip(sizes, sizes[1:]))
        for k, (a, b) in enumerate(pairs):
            lim = final_scale if k == len(pairs) - 1 else 1.0 / np.sqrt(a)
            params.append(rng.uniform(-lim, lim, (a, b)))
            params.append(rng.uniform(-lim, lim, b))
        return cls(tuple(sizes), output, params)

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.output, [p.copy() for p in self.params])

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ShapeError(f"input has {x.shape[-1]} features, network expects {self.sizes[0]}")
        return x

    def forward(self, x: np.ndarray, cache: bool = False):
        x = self._check(x)
        acts = [x]
        h = x
        for k in range(self.n_layers):
            W, b = self.params[2 * k], self.params[2 * k + 1]
            h = h @ W + b
            if k < self.n_layers - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        if self.output == "tanh":
            h = np.tanh(h)
        return (h, acts) if cache else h

    __call__ = forward

    def backward(self, x: np.ndarray, upstream: np.ndarray):
        """Gradients of ``sum(upstream * forward(x))``.

        Returns ``(param_grads, input_grad)``.
        """
        y, acts = self.forward(x, cache=True)
        g = np.asarray(upstream, dtype=float)
        if g.shape != y.shape:
            raise ShapeError(f"upstream shape {g.shape} does not match output {y.shape}")
        if self.output == "tanh":
            g = g * (1.0 - y ** 2)
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        for k in reversed(range(self.n_layers)):
            a_in = acts[k]
            if k < self.n_layers - 1:
                g = g * (acts[k + 1] > 0)
            W = self.params[2 * k]
            grads[2 * k] = a_in.T @ g if a_in.ndim > 1 else np.outer(a_in, g)
            grads[2 * k + 1] = g.sum(axis=0) if g.ndim > 1 else g.copy()
            g = g @ W.T
        return grads, g

    def gradients(self, x: np.ndarray, upstream: np.ndarray) -> list[np.ndarray]:
        return self.backward(x, upstream)[0]

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, v: np.ndarray) -> None:
        i = 0
        for p in self.params:
            p[...] = v[i:i + p.size].reshape(p.shape)
            i += p.size

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "output": self.output,
                "params": [p.tolist() for p in self.params]}

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        return cls(tuple(d["sizes"]), d["output"], [np.asarray(p, float) for p in d["params"]])


@dataclass
class Adam:
    lr: float = 4e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def to_dict(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "t": self.t, "m": [a.tolist() for a in self.m], "v": [a.tolist() for a in self.v]}

    @classmethod
    def from_dict(cls, d: dict) -> "Adam":
        return cls(d["lr"], d["beta1"], d["beta2"], d["eps"], d["t"],
                   [np.asarray(a, float) for a in d["m"]], [np.asarray(a, float) for a in d["v"]])
