"""Dense multilayer perceptrons over named parameter dictionaries."""

from __future__ import annotations

import numpy as np

from flowguard.errors import DimensionError
from flowguard.numcore.tensor import Tensor, as_tensor

ACTIVATIONS = {
    "tanh": Tensor.tanh,
    "relu": Tensor.relu,
    "sigmoid": Tensor.sigmoid,
    "leaky_relu": Tensor.leaky_relu,
    "softplus": Tensor.softplus,
    "linear": lambda t: t,
}


def init_mlp(rng, sizes, prefix="", zero_last=False, dtype=np.float64):
    """Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    ``zero_last`` zeroes the final layer so the net outputs exactly 0.
    """
    params = {}
    n_layers = len(sizes) - 1
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if zero_last and i == n_layers - 1:
            w = np.zeros((fan_in, fan_out), dtype=dtype)
            b = np.zeros(fan_out, dtype=dtype)
        else:
            bound = 1.0 / np.sqrt(max(fan_in, 1))
            w = rng.uniform(-bound, bound, (fan_in, fan_out)).astype(dtype)
            b = rng.uniform(-bound, bound, fan_out).astype(dtype)
        params[f"{prefix}w{i}"] = w
        params[f"{prefix}b{i}"] = b
    return params


def n_layers(params, prefix=""):
    n = 0
    while f"{prefix}w{n}" in params:
        n += 1
    return n


def mlp_forward(params, x, activation="tanh", prefix=""):
    """Affine layers with ``activation`` between them (none after the last)."""
    act = ACTIVATIONS[activation]
    h = as_tensor(x)
    depth = n_layers(params, prefix)
    if depth == 0:
        raise DimensionError(f"no layers found under prefix {prefix!r}")
    for i in range(depth):
        w = as_tensor(params[f"{prefix}w{i}"])
        if h.shape[-1] != w.shape[0]:
            raise DimensionError(
                f"layer {prefix}w{i} expects width {w.shape[0]}, got input of shape {h.shape}"
            )
        h = h @ w + params[f"{prefix}b{i}"]
        if i < depth - 1:
            h = act(h)
    return h
