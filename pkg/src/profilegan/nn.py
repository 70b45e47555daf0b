"""Minimal dense network engine: forward/backward, Adam, spectral norm.

Batches are row vectors: layer i maps x -> act(x @ W.T + b) with W shaped
(out_dim, in_dim). Everything runs in float64 with seedable initialization,
so training is bit-reproducible and analytic gradients can be verified
against central finite differences (see ``gradient_check``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("linear", "leaky_relu", "tanh", "sigmoid")

DEFAULT_LEAK = 0.2


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str = "linear"
    alpha: float = DEFAULT_LEAK  # leaky_relu slope, fixed at construction

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("inconsistent layer dimensions")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class MultiLayerNet:
    layers: list[DenseLayer]

    def __post_init__(self) -> None:
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer output dim {a.out_dim} does not feed layer input dim {b.in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...]; arrays are live references."""
        params: list[np.ndarray] = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.bias)
        return params


def xavier_layer(
    rng: np.random.Generator,
    in_dim: int,
    out_dim: int,
    activation: str = "linear",
    alpha: float = DEFAULT_LEAK,
) -> DenseLayer:
    """Glorot-uniform initialized layer with zero bias."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
    return DenseLayer(weights=weights, bias=np.zeros(out_dim), activation=activation, alpha=alpha)


def feed_forward_net(
    rng: np.random.Generator,
    dims: Sequence[int],
    hidden_activation: str = "leaky_relu",
    output_activation: str = "linear",
    alpha: float = DEFAULT_LEAK,
) -> MultiLayerNet:
    if len(dims) < 2:
        raise ValueError("need at least input and output dims")
    layers = []
    for i in range(len(dims) - 1):
        act = output_activation if i == len(dims) - 2 else hidden_activation
        layers.append(xavier_layer(rng, dims[i], dims[i + 1], act, alpha))
    return MultiLayerNet(layers=layers)


def _activate(z: np.ndarray, kind: str, alpha: float) -> np.ndarray:
    if kind == "linear":
        return z
    if kind == "leaky_relu":
        return np.where(z > 0, z, alpha * z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return sigmoid(z)
    raise ValueError(f"unknown activation {kind!r}")


def _activation_grad(z: np.ndarray, kind: str, alpha: float) -> np.ndarray:
    """d activation / d pre-activation, evaluated at z."""
    if kind == "linear":
        return np.ones_like(z)
    if kind == "leaky_relu":
        return np.where(z > 0, 1.0, alpha)
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if kind == "sigmoid":
        s = sigmoid(z)
        return s * (1.0 - s)
    raise ValueError(f"unknown activation {kind!r}")


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp.
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(net: MultiLayerNet, batch: np.ndarray) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Run the net on a (B, in_dim) batch.

    Returns (output, cache); the cache holds each layer's (input, pre-activation)
    and is consumed by ``backward``.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"batch shape {x.shape} does not match input dim {net.in_dim}")
    cache: list[tuple[np.ndarray, np.ndarray]] = []
    for layer in net.layers:
        z = x @ layer.weights.T + layer.bias
        cache.append((x, z))
        x = _activate(z, layer.activation, layer.alpha)
    if not np.isfinite(x).all():
        raise FloatingPointError("forward pass produced non-finite values")
    return x, cache


def backward(
    net: MultiLayerNet,
    cache: list[tuple[np.ndarray, np.ndarray]],
    output_gradient: np.ndarray,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Backpropagate d(loss)/d(output) through the net.

    Returns (grads, input_gradient) where grads aligns with ``net.parameters()``.
    Parameter gradients are summed over the batch; fold any 1/B into
    ``output_gradient``.
    """
    if len(cache) != len(net.layers):
        raise ValueError("cache does not match network depth")
    grad = np.asarray(output_gradient, dtype=np.float64)
    last_x, last_z = cache[-1]
    if grad.shape != (last_x.shape[0], net.out_dim):
        raise ValueError(f"output gradient shape {grad.shape} does not match net output")
    grads_reversed: list[np.ndarray] = []
    for layer, (x, z) in zip(reversed(net.layers), reversed(cache)):
        if x.shape[1] != layer.in_dim or z.shape[1] != layer.out_dim:
            raise ValueError("cache does not match network layer shapes")
        dz = grad * _activation_grad(z, layer.activation, layer.alpha)
        grads_reversed.append(dz.sum(axis=0))  # bias
        grads_reversed.append(dz.T @ x)  # weights
        grad = dz @ layer.weights
    grads = list(reversed(grads_reversed))
    return grads, grad


@dataclass
class AdamState:
    """Adam moment accumulators for one flat parameter list."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must be in [0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float, **kwargs) -> "AdamState":
        state = cls(lr=lr, **kwargs)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam update, in place on ``params``."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("params/grads do not match optimizer state")
    for g in grads:
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient passed to adam_step")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def spectral_normalize(weights: np.ndarray, iterations: int = 20) -> np.ndarray:
    """Divide a matrix by its largest singular value, estimated by power iteration.

    Near-zero matrices (estimate < 1e-12) are returned unchanged.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    w = np.asarray(weights, dtype=np.float64)
    v = np.full(w.shape[1], 1.0 / np.sqrt(w.shape[1]))
    sigma = 0.0
    for _ in range(iterations):
        u = w @ v
        un = np.linalg.norm(u)
        if un < 1e-12:
            return w
        u /= un
        v = w.T @ u
        vn = np.linalg.norm(v)
        if vn < 1e-12:
            return w
        v /= vn
        sigma = float(u @ (w @ v))
    if sigma < 1e-12:
        return w
    return w / sigma


def gradient_check(
    net: MultiLayerNet,
    batch: np.ndarray,
    loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
    step: float = 1e-5,
) -> float:
    """Max relative error of analytic parameter gradients vs central differences.

    ``loss_fn`` maps the net output to (loss, d loss / d output). Relative
    error is |a - n| / max(|a|, |n|, 1e-8), maximized over every parameter
    element.
    """
    out, cache = forward(net, batch)
    _, grad_out = loss_fn(out)
    analytic, _ = backward(net, cache, grad_out)

    worst = 0.0
    for param, grad in zip(net.parameters(), analytic):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            loss_hi, _ = loss_fn(forward(net, batch)[0])
            flat[i] = orig - step
            loss_lo, _ = loss_fn(forward(net, batch)[0])
            flat[i] = orig
            numeric = (loss_hi - loss_lo) / (2.0 * step)
            err = abs(gflat[i] - numeric) / max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
