"""Adam with bias correction over named parameter dictionaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from flowguard.errors import ContractError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state, params, grads):
    """Apply one Adam update.

    Returns ``(new_params, new_state)``; the inputs are left untouched so two
    calls from the same state give identical results.
    """
    missing = [name for name in params if name not in grads]
    if missing:
        raise ContractError(f"no gradient for parameter {missing[0]!r}")
    t = state.step + 1
    new_m, new_v, new_params = {}, {}, {}
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=p.dtype)
        if g.shape != p.shape:
            raise ContractError(
                f"gradient for {name!r} has shape {g.shape}, parameter has {p.shape}"
            )
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        new_m[name], new_v[name] = m, v
        new_params[name] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    new_state = AdamState(
        lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps,
        step=t, m=new_m, v=new_v,
    )
    return new_params, new_state
