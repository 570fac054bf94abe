"""Dense-layer numerical engine: sinusoidal forward passes, MSE, Adam,
and a central-difference gradient oracle. Everything operates on plain
numpy arrays; parameters travel as ``{name: array}`` dicts so frozen
parts of a network can simply be absent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class NonFiniteError(RuntimeError):
    """A loss, activation, or gradient stopped being finite."""


@dataclass
class DenseLayer:
    """Fully connected layer: ``weights`` is (out_dim, in_dim), ``bias`` is (out_dim,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights)
        self.bias = np.asarray(self.bias)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-d, got shape {self.weights.shape}")
        if self.bias.ndim != 1:
            raise ValueError(f"bias must be 1-d, got shape {self.bias.shape}")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} does not match "
                f"weight rows {self.weights.shape[0]}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise NonFiniteError("layer parameters contain NaN/Inf")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


def linear_layer_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """W @ x + b, batched over leading axes of ``x``."""
    x = np.asarray(x)
    if x.shape[-1] != layer.in_dim:
        raise ValueError(f"input dim {x.shape[-1]} does not match layer in_dim {layer.in_dim}")
    return x @ layer.weights.T + layer.bias


def sine_layer_forward(layer: DenseLayer, x: np.ndarray, freq_scale: float = 1.0) -> np.ndarray:
    """sin(freq_scale * (W @ x + b)), batched like :func:`linear_layer_forward`."""
    if not freq_scale > 0:
        raise ValueError(f"freq_scale must be positive, got {freq_scale}")
    return np.sin(freq_scale * linear_layer_forward(layer, x))


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over all scalar entries of (pred - target)^2."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse_loss of empty arrays is undefined")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of :func:`mse_loss` with respect to ``pred``."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return (2.0 / pred.size) * (pred - target)


@dataclass
class AdamState:
    """First/second moment accumulators mirroring a parameter dict, plus step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **kwargs) -> "AdamState":
        m = {k: np.zeros_like(p) for k, p in params.items()}
        v = {k: np.zeros_like(p) for k, p in params.items()}
        return cls(m=m, v=v, **kwargs)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """One Adam update with bias correction, in place on ``params``.

    Parameters without a gradient entry (frozen) are untouched. A non-finite
    gradient rejects the whole step so a diverging run fails loudly instead
    of poisoning the parameters.
    """
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    for name, g in grads.items():
        if name not in params:
            raise ValueError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} shape {params[name].shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {name!r}; step rejected")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


def finite_diff_grad(
    loss_fn: Callable[[], float],
    params: dict[str, np.ndarray],
    h: float = 1e-6,
) -> dict[str, np.ndarray]:
    """Central-difference gradient (L(p+h) - L(p-h)) / 2h per scalar parameter.

    ``loss_fn`` must read the arrays in ``params`` (they are perturbed in
    place and restored). Intended as an independent test oracle; cost is two
    loss evaluations per scalar.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    out: dict[str, np.ndarray] = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = loss_fn()
            flat_p[i] = orig - h
            down = loss_fn()
            flat_p[i] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NonFiniteError(f"non-finite loss while differencing {name!r}")
            flat_g[i] = (up - down) / (2.0 * h)
        out[name] = g
    return out
