"""Minimal fully connected network with exact backpropagation, plus an
adaptive-moment optimizer. Double precision throughout; rectifier hidden
layers, linear output."""

from __future__ import annotations

import numpy as np

from . import backend

__all__ = ["MLP", "Adam"]


class MLP:
    def __init__(self, layer_sizes: list[int], rng: np.random.Generator | None = None):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.layer_sizes = list(layer_sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        if rng is None:
            for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
                self.weights.append(np.zeros((n_out, n_in)))
                self.biases.append(np.zeros(n_out))
        else:
            for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
                scale = np.sqrt(2.0 / n_in)
                self.weights.append(rng.normal(0.0, scale, size=(n_out, n_in)))
                self.biases.append(np.zeros(n_out))

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def forward_single(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.n_inputs,):
            raise ValueError(f"input shape {x.shape} != ({self.n_inputs},)")
        return backend.forward_single(self.weights, self.biases, x)

    def forward_batch(self, X: np.ndarray):
        """Returns (output, cache) where cache holds layer activations for backward."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_inputs:
            raise ValueError(f"batch shape {X.shape} incompatible with input size {self.n_inputs}")
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W.T + b
            if i != last:
                np.maximum(h, 0.0, out=h)
            acts.append(h)
        return h, acts

    def backward(self, acts: list[np.ndarray], d_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (d_weights, d_biases) matching self.weights/self.biases.
        """
        d_weights = [None] * len(self.weights)
        d_biases = [None] * len(self.biases)
        delta = np.asarray(d_out, dtype=np.float64)
        for i in range(len(self.weights) - 1, -1, -1):
            d_weights[i] = delta.T @ acts[i]
            d_biases[i] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i]
                delta = delta * (acts[i] > 0.0)
        return d_weights, d_biases

    def copy(self) -> "MLP":
        clone = MLP(self.layer_sizes, rng=None)
        clone.weights = [W.copy() for W in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def copy_from(self, other: "MLP"):
        for dst, src in zip(self.weights, other.weights):
            np.copyto(dst, src)
        for dst, src in zip(self.biases, other.biases):
            np.copyto(dst, src)


class Adam:
    def __init__(self, net: MLP, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._params = net.weights + net.biases
        self.m = [np.zeros_like(p) for p in self._params]
        self.v = [np.zeros_like(p) for p in self._params]

    def step(self, d_weights, d_biases):
        self.step_count += 1
        grads = list(d_weights) + list(d_biases)
        for p, g, m, v in zip(self._params, grads, self.m, self.v):
            backend.adam_step(
                p.reshape(-1), np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
                m.reshape(-1), v.reshape(-1),
                self.step_count, self.lr, self.beta1, self.beta2, self.eps)

    def state_dict(self) -> dict:
        return {
            "step_count": self.step_count,
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "m": [a.tolist() for a in self.m],
            "v": [a.tolist() for a in self.v],
        }

    def load_state_dict(self, state: dict):
        self.step_count = int(state["step_count"])
        self.lr = float(state["lr"])
        self.beta1 = float(state["beta1"])
        self.beta2 = float(state["beta2"])
        self.eps = float(state["eps"])
        for dst, src in zip(self.m, state["m"]):
            np.copyto(dst, np.asarray(src, dtype=np.float64).reshape(dst.shape))
        for dst, src in zip(self.v, state["v"]):
            np.copyto(dst, np.asarray(src, dtype=np.float64).reshape(dst.shape))
