"""Dense feed-forward networks with exact reverse-mode gradients.

Hidden layers use the leaky rectifier y = max(beta*x, x); the output layer
is either tanh (policy networks, range (-1, 1)) or identity (value
networks).  Everything is float64 numpy; batches are row-major
(batch, features).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import ConfigurationError

TANH = "tanh"
LINEAR = "linear"

_OUTPUT_ACTIVATIONS = (TANH, LINEAR)


@dataclass
class MlpParams:
    """Weights/biases of a dense network.

    weights[j] has shape (layer_sizes[j+1], layer_sizes[j]); biases[j] has
    length layer_sizes[j+1].  ``beta`` is the hidden-layer leaky slope
    (derivative at exactly 0 is defined as beta).
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    beta: float
    output_activation: str = TANH

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpParams":
        return MlpParams(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            beta=self.beta,
            output_activation=self.output_activation,
        )

    def flat(self) -> np.ndarray:
        """All parameters concatenated (weights then bias per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def validate(self) -> None:
        if len(self.layer_sizes) < 2 or any(s <= 0 for s in self.layer_sizes):
            raise ConfigurationError(f"bad layer sizes {self.layer_sizes}")
        if self.beta <= 0:
            raise ConfigurationError(f"hidden slope beta must be > 0, got {self.beta}")
        if self.output_activation not in _OUTPUT_ACTIVATIONS:
            raise ConfigurationError(f"unknown output activation {self.output_activation!r}")
        for j, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_sizes[j + 1], self.layer_sizes[j])
            if w.shape != want or b.shape != (want[0],):
                raise ConfigurationError(
                    f"layer {j}: weight {w.shape} / bias {b.shape}, expected {want}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ConfigurationError(f"layer {j}: non-finite parameters")


@dataclass
class ParamGrads:
    """Gradients, shape-congruent with an MlpParams."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.d_weights, self.d_biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def is_finite(self) -> bool:
        return all(np.isfinite(g).all() for g in self.d_weights) and all(
            np.isfinite(g).all() for g in self.d_biases
        )


@dataclass
class ForwardCache:
    """Pre-activations and layer inputs retained for the backward pass."""

    inputs: list[np.ndarray] = field(default_factory=list)   # input to each layer
    pre_acts: list[np.ndarray] = field(default_factory=list)  # z = x W^T + b
    output: np.ndarray | None = None
    n_layers: int = 0


def mlp_init(
    layer_sizes: list[int],
    beta: float,
    output_activation: str,
    weight_scale: float,
    bias_scale: float,
    rng: np.random.Generator,
) -> MlpParams:
    """Initialize uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], then scale.

    The scale factors multiply the base draw, so they act as pure magnitude
    knobs on top of a standard fan-in initialization.
    """
    if len(layer_sizes) < 2 or any(s <= 0 for s in layer_sizes):
        raise ConfigurationError(f"bad layer sizes {layer_sizes}")
    if weight_scale <= 0 or bias_scale <= 0:
        raise ConfigurationError(
            f"scale factors must be > 0, got weight {weight_scale}, bias {bias_scale}"
        )
    if beta <= 0:
        raise ConfigurationError(f"hidden slope beta must be > 0, got {beta}")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(weight_scale * rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(bias_scale * rng.uniform(-bound, bound, size=fan_out))
    params = MlpParams(
        layer_sizes=list(layer_sizes),
        weights=weights,
        biases=biases,
        beta=float(beta),
        output_activation=output_activation,
    )
    params.validate()
    return params


def _leaky(z: np.ndarray, beta: float) -> np.ndarray:
    return np.maximum(beta * z, z)


def _leaky_slope(z: np.ndarray, beta: float) -> np.ndarray:
    # Derivative at exactly 0 is beta (kink convention, kept consistent
    # with the finite-difference tests which avoid the kink).
    return np.where(z > 0.0, 1.0, beta)


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network; x is (features,) or (batch, features)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != params.in_dim:
        raise ConfigurationError(
            f"input width {x.shape[1]} does not match network input {params.in_dim}"
        )
    cache = ForwardCache(n_layers=len(params.weights))
    h = x
    last = len(params.weights) - 1
    for j, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        z = h @ w.T + b
        cache.pre_acts.append(z)
        if j < last:
            h = _leaky(z, params.beta)
        elif params.output_activation == TANH:
            h = np.tanh(z)
        else:
            h = z
    cache.output = h
    out = h[0] if squeeze else h
    return out, cache


def mlp_backward(
    params: MlpParams, cache: ForwardCache, output_cotangent: np.ndarray
) -> tuple[ParamGrads, np.ndarray]:
    """Exact reverse-mode gradients for a cached forward pass.

    Returns (parameter gradients, cotangent w.r.t. the network input).
    Batched cotangents are summed into the parameter gradients, matching
    d(sum of per-sample scalars)/d(params).
    """
    g = np.asarray(output_cotangent, dtype=np.float64)
    squeeze = g.ndim == 1
    if squeeze:
        g = g[None, :]
    if cache.output is None or g.shape != cache.output.shape:
        raise ConfigurationError("cotangent shape does not match cached forward pass")
    last = cache.n_layers - 1
    if params.output_activation == TANH:
        delta = g * (1.0 - cache.output ** 2)
    else:
        delta = g
    d_weights: list[np.ndarray] = [None] * cache.n_layers  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * cache.n_layers  # type: ignore[list-item]
    for j in range(last, -1, -1):
        d_weights[j] = delta.T @ cache.inputs[j]
        d_biases[j] = delta.sum(axis=0)
        delta = delta @ params.weights[j]
        if j > 0:
            delta = delta * _leaky_slope(cache.pre_acts[j - 1], params.beta)
    grads = ParamGrads(d_weights=d_weights, d_biases=d_biases)
    x_cot = delta[0] if squeeze else delta
    return grads, x_cot


def input_cotangent(params: MlpParams, cache: ForwardCache, output_cotangent: np.ndarray) -> np.ndarray:
    """Cotangent w.r.t. the input only (skips the dW/db products)."""
    g = np.asarray(output_cotangent, dtype=np.float64)
    squeeze = g.ndim == 1
    if squeeze:
        g = g[None, :]
    if params.output_activation == TANH:
        delta = g * (1.0 - cache.output ** 2)
    else:
        delta = g
    for j in range(cache.n_layers - 1, -1, -1):
        delta = delta @ params.weights[j]
        if j > 0:
            delta = delta * _leaky_slope(cache.pre_acts[j - 1], params.beta)
    return delta[0] if squeeze else delta
