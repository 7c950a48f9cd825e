"""First-order optimizers over MlpParams (Adam default; SGD/RMSprop variants).

All optimizers minimize: they step along the negative gradient.  Callers
that maximize pass the negated gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import ConfigurationError, TrainingFault
from .mlp import MlpParams, ParamGrads


def _zeros_like_params(params: MlpParams) -> tuple[list[np.ndarray], list[np.ndarray]]:
    return ([np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases])


@dataclass
class AdamState:
    """Bias-corrected Adam moments (defaults 0.9 / 0.999 / 1e-8)."""

    m_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_w: list[np.ndarray]
    v_b: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        mw, mb = _zeros_like_params(params)
        vw, vb = _zeros_like_params(params)
        return cls(m_w=mw, m_b=mb, v_w=vw, v_b=vb, beta1=beta1, beta2=beta2, eps=eps)


@dataclass
class SgdState:
    """Plain gradient descent; optional classical momentum."""

    momentum: float = 0.0
    vel_w: list[np.ndarray] = field(default_factory=list)
    vel_b: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: MlpParams, momentum: float = 0.0) -> "SgdState":
        vw, vb = _zeros_like_params(params)
        return cls(momentum=momentum, vel_w=vw, vel_b=vb)


@dataclass
class RmsPropState:
    """RMSprop running mean of squared gradients."""

    sq_w: list[np.ndarray]
    sq_b: list[np.ndarray]
    rho: float = 0.99
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams, rho: float = 0.99, eps: float = 1e-8) -> "RmsPropState":
        sw, sb = _zeros_like_params(params)
        return cls(sq_w=sw, sq_b=sb, rho=rho, eps=eps)


OptimizerState = AdamState | SgdState | RmsPropState


def make_optimizer(kind: str, params: MlpParams) -> OptimizerState:
    kind = kind.lower()
    if kind == "adam":
        return AdamState.for_params(params)
    if kind == "sgd":
        return SgdState.for_params(params)
    if kind == "rmsprop":
        return RmsPropState.for_params(params)
    raise ConfigurationError(f"unknown optimizer {kind!r}")


def optimizer_step(state: OptimizerState, params: MlpParams, grads: ParamGrads, lr: float) -> None:
    """One in-place minimization step; lr = 0 leaves params untouched."""
    if lr < 0:
        raise ConfigurationError(f"learning rate must be >= 0, got {lr}")
    if not grads.is_finite():
        raise TrainingFault("non-finite gradient passed to optimizer")
    if isinstance(state, AdamState):
        _adam_step(state, params, grads, lr)
    elif isinstance(state, SgdState):
        _sgd_step(state, params, grads, lr)
    elif isinstance(state, RmsPropState):
        _rmsprop_step(state, params, grads, lr)
    else:  # pragma: no cover
        raise ConfigurationError(f"unknown optimizer state {type(state)!r}")


def _adam_apply(p: np.ndarray, g: np.ndarray, m: np.ndarray, v: np.ndarray,
                b1: float, b2: float, c1: float, c2: float, lr: float, eps: float) -> None:
    # In-place with one scratch array; this runs twice per training tick on
    # every parameter tensor, so temporaries matter.
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    scratch = np.square(g)
    scratch *= 1.0 - b2
    v += scratch
    np.divide(v, c2, out=scratch)
    np.sqrt(scratch, out=scratch)
    scratch += eps
    np.divide(m, scratch, out=scratch)
    scratch *= lr / c1
    p -= scratch


def _adam_step(state: AdamState, params: MlpParams, grads: ParamGrads, lr: float) -> None:
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for w, b, gw, gb, mw, mb, vw, vb in zip(
        params.weights, params.biases, grads.d_weights, grads.d_biases,
        state.m_w, state.m_b, state.v_w, state.v_b,
    ):
        _adam_apply(w, gw, mw, vw, b1, b2, c1, c2, lr, state.eps)
        _adam_apply(b, gb, mb, vb, b1, b2, c1, c2, lr, state.eps)


def _sgd_step(state: SgdState, params: MlpParams, grads: ParamGrads, lr: float) -> None:
    mu = state.momentum
    for w, b, gw, gb, vw, vb in zip(
        params.weights, params.biases, grads.d_weights, grads.d_biases,
        state.vel_w, state.vel_b,
    ):
        if mu > 0.0:
            vw *= mu
            vw += gw
            vb *= mu
            vb += gb
            w -= lr * vw
            b -= lr * vb
        else:
            w -= lr * gw
            b -= lr * gb


def _rmsprop_step(state: RmsPropState, params: MlpParams, grads: ParamGrads, lr: float) -> None:
    rho = state.rho
    for w, b, gw, gb, sw, sb in zip(
        params.weights, params.biases, grads.d_weights, grads.d_biases,
        state.sq_w, state.sq_b,
    ):
        sw *= rho
        sw += (1.0 - rho) * gw * gw
        w -= lr * gw / (np.sqrt(sw) + state.eps)
        sb *= rho
        sb += (1.0 - rho) * gb * gb
        b -= lr * gb / (np.sqrt(sb) + state.eps)
