"""Flow model: a stack of invertible layers over a standard Gaussian latent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from flowguard.errors import ConfigError, DimensionError, NumericError
from flowguard.flow.layers import (
    ActNorm,
    CouplingBlock,
    InvertibleLinear,
    check_scaling,
    layer_from_arch,
)
from flowguard.numcore.rng import as_rng
from flowguard.numcore.tensor import Tensor, concat, no_grad

PRECISIONS = {"single": np.float32, "double": np.float64}


def resolve_precision(precision):
    if isinstance(precision, str):
        try:
            return np.dtype(PRECISIONS[precision])
        except KeyError:
            raise ConfigError(
                f"unknown precision {precision!r}; expected 'single' or 'double'"
            ) from None
    dtype = np.dtype(precision)
    if dtype not in (np.float32, np.float64):
        raise ConfigError(f"unsupported precision {dtype}")
    return dtype


@dataclass
class LatentCode:
    z: np.ndarray
    log_det: np.ndarray
    layer_log_dets: list = field(default_factory=list)


class FlowModel:
    """Invertible map ``f`` from data to latent space.

    Layers act on the leading ``layer.width`` coordinates; with factoring-out
    the trailing coordinates skip the remaining layers and go straight to the
    latent vector.
    """

    def __init__(self, d, layers, params, variant="half_sigmoid", meta=None):
        self.d = int(d)
        self.layers = list(layers)
        self.params = dict(params)
        self.variant = variant
        self.meta = dict(meta or {})
        self._cast = {}

    # -- parameters ---------------------------------------------------------
    def trainable_names(self):
        names = []
        for layer in self.layers:
            if layer.trainable:
                names.extend(k for k in self.params if k.startswith(layer.prefix))
        return names

    def with_params(self, params):
        merged = dict(self.params)
        merged.update(params)
        return FlowModel(self.d, self.layers, merged, self.variant, self.meta)

    def cast_params(self, dtype):
        dtype = np.dtype(dtype)
        if dtype not in self._cast:
            self._cast[dtype] = {k: v.astype(dtype) for k, v in self.params.items()}
        return self._cast[dtype]

    def arch(self):
        return {
            "d": self.d,
            "variant": self.variant,
            "layers": [layer.arch() for layer in self.layers],
            "meta": self.meta,
        }

    @property
    def n_blocks(self):
        return sum(1 for layer in self.layers if isinstance(layer, CouplingBlock))

    # -- maps -------------------------------------------------------------------
    def _check_input(self, x):
        if x.ndim != 2 or x.shape[1] != self.d:
            raise DimensionError(f"expected input of width {self.d}, got shape {x.shape}")

    def forward_tensor(self, x, params=None, check=True):
        """Differentiable forward pass; returns ``(z, log_det, per-layer log-dets)``."""
        params = self.params if params is None else params
        self._check_input(x)
        n = x.shape[0]
        log_det = Tensor(np.zeros(n, dtype=x.dtype))
        per_layer = []
        h = x
        for layer in self.layers:
            w = layer.width
            if w == self.d:
                h, ld = layer.forward(params, h, check)
            else:
                head, ld = layer.forward(params, h.take(np.arange(w)), check)
                h = concat([head, h.take(np.arange(w, self.d))], axis=1)
            if check and not np.all(np.isfinite(h.data)):
                raise NumericError(f"non-finite activations after layer {layer.index}", block=layer.index)
            per_layer.append(ld)
            log_det = log_det + ld
        return h, log_det, per_layer

    def forward(self, x, precision="double", check=True):
        dtype = resolve_precision(precision)
        x = np.asarray(x, dtype=dtype)
        with no_grad(), np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            z, log_det, per_layer = self.forward_tensor(Tensor(x), self.cast_params(dtype), check)
        return LatentCode(z.data, log_det.data, [ld.data for ld in per_layer])

    def inverse(self, z, precision="double", check=True):
        dtype = resolve_precision(precision)
        z = np.asarray(z, dtype=dtype)
        self._check_input(z)
        params = self.cast_params(dtype)
        h = Tensor(z)
        with no_grad(), np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for layer in reversed(self.layers):
                w = layer.width
                if w == self.d:
                    h = layer.inverse(params, h, check)
                else:
                    head = layer.inverse(params, h.take(np.arange(w)), check)
                    h = concat([head, h.take(np.arange(w, self.d))], axis=1)
                if check and not np.all(np.isfinite(h.data)):
                    raise NumericError(
                        f"non-finite values inverting layer {layer.index}", block=layer.index
                    )
        return h.data

    def log_density(self, x, precision="double", check=True):
        code = self.forward(x, precision, check)
        return gaussian_log_density(code.z, code.log_det, check)


def gaussian_log_density(z, log_det, check=True):
    d = z.shape[-1]
    const = np.asarray(-0.5 * d * math.log(2 * math.pi), dtype=z.dtype)
    out = const - 0.5 * np.sum(z * z, axis=-1) + log_det
    if check and not np.all(np.isfinite(out)):
        raise NumericError("non-finite log-density")
    return out


def gaussian_log_density_tensor(z, log_det):
    d = z.shape[-1]
    return (z * z).sum(axis=1) * -0.5 + log_det - 0.5 * d * math.log(2 * math.pi)


def build_flow(d, n_blocks=8, hidden_width=64, hidden_layers=2, scaling="half_sigmoid",
               mix_every=2, actnorm=True, factor_out_after=None, activation="tanh",
               seed=0, init_data=None):
    """Construct a freshly initialized :class:`FlowModel`.

    ``init_data`` seeds the actnorm layer with per-coordinate mean and scale.
    """
    if d < 1:
        raise ConfigError(f"dimension must be positive, got {d}")
    check_scaling(scaling)
    if factor_out_after is not None and not 0 <= factor_out_after < n_blocks:
        raise ConfigError(f"factor_out_after={factor_out_after} outside [0, {n_blocks})")
    rng = as_rng(seed).child("flow-init")
    layers, params = [], {}

    def add(layer, **kw):
        layers.append(layer)
        params.update(layer.init_params(rng.child(layer.prefix), **kw))

    if actnorm:
        add(ActNorm(len(layers), d), data=init_data)
    width = d
    for b in range(n_blocks):
        add(CouplingBlock(len(layers), width, b % 2, scaling, hidden_width, hidden_layers, activation))
        if mix_every and (b + 1) % mix_every == 0:
            add(InvertibleLinear(len(layers), width))
        if factor_out_after is not None and b == factor_out_after:
            width = d - d // 2
    meta = {
        "n_blocks": n_blocks, "hidden_width": hidden_width, "hidden_layers": hidden_layers,
        "mix_every": mix_every, "actnorm": bool(actnorm), "factor_out_after": factor_out_after,
        "activation": activation, "seed": int(as_rng(seed).seed),
    }
    return FlowModel(d, layers, params, scaling, meta)


def model_from_arch(arch, params):
    layers = [layer_from_arch(spec) for spec in arch["layers"]]
    return FlowModel(arch["d"], layers, params, arch["variant"], arch.get("meta"))


# functional surface -------------------------------------------------------------


def forward(model, x, precision="double", check=True):
    return model.forward(np.atleast_2d(x), precision, check)


def inverse(model, z, precision="double", check=True):
    return model.inverse(np.atleast_2d(z), precision, check)


def log_density(model, x, precision="double", check=True):
    return model.log_density(np.atleast_2d(x), precision, check)


def couple_forward(block, params, x, precision="double"):
    """Apply one coupling block; returns ``(h, logdet)`` as arrays."""
    dtype = resolve_precision(precision)
    x = np.atleast_2d(np.asarray(x, dtype=dtype))
    params = {k: np.asarray(v, dtype=dtype) for k, v in params.items()}
    with no_grad():
        h, logdet = block.forward(params, Tensor(x))
    return h.data, logdet.data


def couple_inverse(block, params, h, precision="double"):
    dtype = resolve_precision(precision)
    h = np.atleast_2d(np.asarray(h, dtype=dtype))
    params = {k: np.asarray(v, dtype=dtype) for k, v in params.items()}
    with no_grad():
        return block.inverse(params, Tensor(h)).data


def permutation_layer(index, d, perm):
    return InvertibleLinear.permutation(index, d, perm)
