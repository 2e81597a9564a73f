"""Plain dense networks and Adam, with hand-written reverse mode.

Used for the SAC critics, the exploration-scale head, and the floating-point
baseline actor. Nothing here is deployed; keeping the implementation to a
couple of matmuls makes gradient checks trivial and training deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


class Mlp:
    """Fully connected network, ReLU hidden activations, linear output.

    float32 keeps the auxiliary networks cheap during training; gradient
    checks construct float64 instances.
    """

    def __init__(self, sizes, rng: np.random.Generator, activation: str = "relu",
                 dtype=np.float32):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        self.activation = activation
        self.dtype = np.dtype(dtype)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound,
                                            size=(fan_out, fan_in)).astype(self.dtype))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out).astype(self.dtype))

    def _act(self, x):
        if self.activation == "relu":
            return np.maximum(x, 0.0)
        return x

    def forward(self, x: np.ndarray, cache: list | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ShapeError(f"input dim {x.shape[1]} != {self.sizes[0]}")
        if cache is not None:
            cache.append(x)
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            h = z if i == last else self._act(z)
            if cache is not None:
                cache.append(h)
        return h[0] if squeeze else h

    def backward(self, cache: list, d_out: np.ndarray):
        """Gradients for a cached forward pass.

        Returns (grads, d_input); grads maps 'w{i}'/'b{i}' to arrays shaped
        like the parameters.
        """
        d_out = np.asarray(d_out, dtype=self.dtype)
        if d_out.ndim == 1:
            d_out = d_out[None, :]
        grads = {}
        delta = d_out
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = cache[i]
            if i != len(self.weights) - 1:
                act_out = cache[i + 1]
                if self.activation == "relu":
                    delta = delta * (act_out > 0)
            grads[f"w{i}"] = delta.T @ h_in
            grads[f"b{i}"] = delta.sum(axis=0)
            delta = delta @ self.weights[i]
        return grads, delta

    def parameters(self) -> dict:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.sizes = list(self.sizes)
        clone.activation = self.activation
        clone.dtype = self.dtype
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


def mlp_forward_backward(net: Mlp, x: np.ndarray, d_out: np.ndarray | None = None):
    """Forward pass plus gradients in one call (unit upstream by default)."""
    cache = []
    y = net.forward(x, cache=cache)
    if d_out is None:
        d_out = np.ones_like(np.atleast_2d(y))
    grads, d_in = net.backward(cache, d_out)
    return y, grads, d_in


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One in-place Adam update."""
    if grad.shape != param.shape:
        raise ShapeError(f"gradient shape {grad.shape} != parameter shape {param.shape}")
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grad
    state.v *= beta2
    state.v += (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Adam over a named set of parameter arrays, updated in place."""

    def __init__(self, params: dict, lr: float):
        self.params = params
        self.lr = lr
        self.states = {k: AdamState(m=np.zeros_like(v), v=np.zeros_like(v))
                       for k, v in params.items()}

    def step(self, grads: dict) -> None:
        for name, grad in grads.items():
            adam_step(self.params[name], grad, self.states[name], self.lr)


def polyak_update(target: Mlp, online: Mlp, tau: float) -> None:
    """theta' <- (1 - tau) theta' + tau theta, elementwise."""
    for tw, ow in zip(target.weights, online.weights):
        tw *= 1.0 - tau
        tw += tau * ow
    for tb, ob in zip(target.biases, online.biases):
        tb *= 1.0 - tau
        tb += tau * ob
