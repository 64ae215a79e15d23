"""Optimizers: bias-corrected Adam (the default, lr 0.001) and plain SGD
behind the same step interface. Steps are functional: they return fresh
parameter and state objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import ModelParams


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(params: ModelParams, lr: float = 0.001, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    zeros = {name: np.zeros_like(arr) for name, arr in params.items()}
    return AdamState(m=ModelParams(**zeros),
                     v=ModelParams(**{k: v.copy() for k, v in zeros.items()}),
                     t=0, lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_step(params: ModelParams, grads: ModelParams,
              state: AdamState) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; raises on non-finite gradients."""
    t = state.t + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params = {}
    new_m = {}
    new_v = {}
    for (name, p), (_, g), (_, m), (_, v) in zip(params.items(), grads.items(),
                                                 state.m.items(), state.v.items()):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape mismatch for {name}: {p.shape} vs {g.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        new_params[name] = p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        new_m[name] = m
        new_v[name] = v
    next_state = AdamState(m=ModelParams(**new_m), v=ModelParams(**new_v), t=t,
                           lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                           epsilon=state.epsilon)
    return ModelParams(**new_params), next_state


@dataclass
class SgdState:
    t: int = 0
    lr: float = 0.001


def init_sgd(params: ModelParams, lr: float = 0.001) -> SgdState:
    return SgdState(t=0, lr=lr)


def sgd_step(params: ModelParams, grads: ModelParams,
             state: SgdState) -> tuple[ModelParams, SgdState]:
    new_params = {}
    for (name, p), (_, g) in zip(params.items(), grads.items()):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
        new_params[name] = p - state.lr * g
    return ModelParams(**new_params), SgdState(t=state.t + 1, lr=state.lr)
