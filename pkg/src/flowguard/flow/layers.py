"""Invertible layers: affine coupling, LU-parameterized mixing, actnorm."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from flowguard.errors import ConfigError, NumericError
from flowguard.numcore.mlp import init_mlp, mlp_forward
from flowguard.numcore.tensor import Tensor, as_tensor, scatter_columns

SCALINGS = ("sigmoid", "half_sigmoid", "clip15", "additive")
CLIP_MAX = 15.0
# smallest coupling scale the inverse will divide by
SCALE_FLOOR = 1e-30


def check_scaling(variant):
    if variant not in SCALINGS:
        raise ConfigError(f"unknown scaling {variant!r}; expected one of {', '.join(SCALINGS)}")
    return variant


def restricted_scale(s, variant):
    """Return ``(g(s), log g(s))`` for a scale-net output ``s``.

    half_sigmoid maps into (0.5, 1); clip15 is ``min(|s|, 15)``.
    """
    s = as_tensor(s)
    if variant == "sigmoid":
        return s.sigmoid(), s.log_sigmoid()
    if variant == "half_sigmoid":
        g = s.sigmoid() * 0.5 + 0.5
        # keep g strictly inside (0.5, 1) where the sigmoid saturates
        one = np.asarray(1, dtype=g.dtype)
        g = g.minimum(np.nextafter(one, 0))
        g = -((-g).minimum(-np.nextafter(one / 2, 1)))
        return g, g.log()
    if variant == "clip15":
        g = s.abs().minimum(CLIP_MAX)
        return g, g.log()
    if variant == "additive":
        one = Tensor(np.ones_like(s.data))
        return one, Tensor(np.zeros_like(s.data))
    raise ConfigError(f"unknown scaling {variant!r}")


def _finite(t, index, what):
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite {what} in layer {index}", block=index)


class CouplingBlock:
    """``h_a = x_a``, ``h_b = x_b * g(s(x_a)) + t(x_a)`` on the leading ``width`` coords.

    ``parity`` 0 conditions on even coordinates, 1 on odd ones.
    """

    kind = "coupling"

    def __init__(self, index, width, parity, variant="half_sigmoid", hidden_width=64,
                 hidden_layers=2, activation="tanh"):
        self.index = index
        self.width = width
        self.parity = parity
        self.variant = check_scaling(variant)
        self.hidden_width = hidden_width
        self.hidden_layers = hidden_layers
        self.activation = activation
        coords = np.arange(width)
        self.a_idx = coords[coords % 2 == parity]
        self.b_idx = coords[coords % 2 != parity]
        self.prefix = f"layer{index}."

    @property
    def trainable(self):
        return True

    def arch(self):
        return {
            "kind": self.kind, "index": self.index, "width": self.width, "parity": self.parity,
            "variant": self.variant, "hidden_width": self.hidden_width,
            "hidden_layers": self.hidden_layers, "activation": self.activation,
        }

    def init_params(self, rng, dtype=np.float64):
        sizes = [len(self.a_idx)] + [self.hidden_width] * self.hidden_layers + [len(self.b_idx)]
        params = init_mlp(rng.child("t"), sizes, prefix=self.prefix + "t.", zero_last=True, dtype=dtype)
        if self.variant != "additive":
            s = init_mlp(rng.child("s"), sizes, prefix=self.prefix + "s.", zero_last=True, dtype=dtype)
            if self.variant == "clip15":
                # g(0) = 0 is singular; start clip15 blocks at g = 1
                s[f"{self.prefix}s.b{self.hidden_layers}"][:] = 1.0
            params.update(s)
        return params

    def _nets(self, params, xa, check):
        t = mlp_forward(params, xa, self.activation, prefix=self.prefix + "t.")
        if check:
            _finite(t, self.index, "t-net output")
        if self.variant == "additive":
            return None, None, t
        s = mlp_forward(params, xa, self.activation, prefix=self.prefix + "s.")
        if check:
            _finite(s, self.index, "s-net output")
        g, log_g = restricted_scale(s, self.variant)
        return g, log_g, t

    def forward(self, params, x, check=True):
        xa, xb = x.take(self.a_idx), x.take(self.b_idx)
        g, log_g, t = self._nets(params, xa, check)
        if g is None:
            hb = xb + t
            logdet = Tensor(np.zeros(x.shape[0], dtype=x.dtype))
        else:
            hb = xb * g + t
            logdet = log_g.sum(axis=1)
        return scatter_columns([xa, hb], [self.a_idx, self.b_idx], self.width), logdet

    def inverse(self, params, h, check=True):
        ha, hb = h.take(self.a_idx), h.take(self.b_idx)
        g, _, t = self._nets(params, ha, check)
        if g is None:
            xb = hb - t
        else:
            if check and np.any(g.data < SCALE_FLOOR):
                raise NumericError(f"coupling scale below floor in layer {self.index}", block=self.index)
            xb = (hb - t) / g
        return scatter_columns([ha, xb], [self.a_idx, self.b_idx], self.width)


class InvertibleLinear:
    """``z = x W^T`` with ``W = P L U``; L unit lower, U upper with diag ``sign*exp(log_s)``."""

    kind = "linear"

    def __init__(self, index, width, perm=None, sign=None, trainable=True):
        self.index = index
        self.width = width
        self.perm = np.arange(width) if perm is None else np.asarray(perm, dtype=np.intp)
        self.sign = np.ones(width) if sign is None else np.asarray(sign, dtype=np.float64)
        self._trainable = trainable
        self.prefix = f"layer{index}."
        self._lower_mask = np.tril(np.ones((width, width)), -1)
        self._upper_mask = np.triu(np.ones((width, width)), 1)

    @classmethod
    def permutation(cls, index, width, perm):
        """A fixed pure permutation (|det| = 1)."""
        return cls(index, width, perm=perm, trainable=False)

    @property
    def trainable(self):
        return self._trainable

    def arch(self):
        return {
            "kind": self.kind, "index": self.index, "width": self.width,
            "perm": [int(p) for p in self.perm], "sign": [float(s) for s in self.sign],
            "trainable": self._trainable,
        }

    def init_params(self, rng, dtype=np.float64):
        w = self.width
        if not self._trainable:
            return {
                self.prefix + "lower": np.zeros((w, w), dtype=dtype),
                self.prefix + "upper": np.zeros((w, w), dtype=dtype),
                self.prefix + "log_s": np.zeros(w, dtype=dtype),
            }
        q, _ = np.linalg.qr(rng.normal(size=(w, w)))
        p, lower, upper = scipy.linalg.lu(q)
        self.perm = np.argmax(p, axis=0)
        diag = np.diag(upper)
        self.sign = np.sign(diag)
        return {
            self.prefix + "lower": (lower * self._lower_mask).astype(dtype),
            self.prefix + "upper": (upper * self._upper_mask).astype(dtype),
            self.prefix + "log_s": np.log(np.abs(diag)).astype(dtype),
        }

    def _perm_matrix(self, dtype):
        p = np.zeros((self.width, self.width), dtype=dtype)
        p[self.perm, np.arange(self.width)] = 1
        return p

    def _factors(self, params, dtype):
        lower = as_tensor(params[self.prefix + "lower"]) * self._lower_mask.astype(dtype)
        lower = lower + np.eye(self.width, dtype=dtype)
        log_s = as_tensor(params[self.prefix + "log_s"])
        diag = (log_s.exp() * self.sign.astype(dtype)).reshape(1, self.width)
        upper = as_tensor(params[self.prefix + "upper"]) * self._upper_mask.astype(dtype)
        upper = upper + diag * np.eye(self.width, dtype=dtype)
        return lower, upper, log_s

    def weight(self, params, dtype=np.float64):
        lower, upper, _ = self._factors(params, dtype)
        return as_tensor(self._perm_matrix(dtype)) @ (lower @ upper)

    def forward(self, params, x, check=True):
        lower, upper, log_s = self._factors(params, x.dtype)
        if self._trainable:
            w = as_tensor(self._perm_matrix(x.dtype)) @ (lower @ upper)
            z = x @ w.T
        else:
            z = x.take(np.argsort(self.perm))
        logdet = Tensor(np.ones(x.shape[0], dtype=x.dtype)) * log_s.sum()
        return z, logdet

    def inverse(self, params, h, check=True):
        if not self._trainable:
            return h.take(self.perm)
        dtype = h.dtype
        lower, upper, _ = self._factors(params, dtype)
        # z^T = P L U x^T
        rhs = (h.data @ self._perm_matrix(dtype)).T
        y = scipy.linalg.solve_triangular(lower.data, rhs, lower=True, unit_diagonal=True)
        x = scipy.linalg.solve_triangular(upper.data, y, lower=False)
        return Tensor(np.ascontiguousarray(x.T, dtype=dtype))


class ActNorm:
    """Per-coordinate affine normalization ``(x + loc) * exp(log_scale)``."""

    kind = "actnorm"

    def __init__(self, index, width):
        self.index = index
        self.width = width
        self.prefix = f"layer{index}."

    @property
    def trainable(self):
        return True

    def arch(self):
        return {"kind": self.kind, "index": self.index, "width": self.width}

    def init_params(self, rng, dtype=np.float64, data=None):
        loc = np.zeros(self.width, dtype=dtype)
        log_scale = np.zeros(self.width, dtype=dtype)
        if data is not None:
            data = np.asarray(data, dtype=np.float64)[:, : self.width]
            loc = (-data.mean(axis=0)).astype(dtype)
            log_scale = (-np.log(data.std(axis=0) + 1e-6)).astype(dtype)
        return {self.prefix + "loc": loc, self.prefix + "log_scale": log_scale}

    def forward(self, params, x, check=True):
        log_scale = as_tensor(params[self.prefix + "log_scale"])
        z = (x + params[self.prefix + "loc"]) * log_scale.exp()
        logdet = Tensor(np.ones(x.shape[0], dtype=x.dtype)) * log_scale.sum()
        return z, logdet

    def inverse(self, params, h, check=True):
        log_scale = as_tensor(params[self.prefix + "log_scale"])
        return h * (-log_scale).exp() - params[self.prefix + "loc"]


def layer_from_arch(spec):
    kind = spec["kind"]
    if kind == "coupling":
        return CouplingBlock(
            spec["index"], spec["width"], spec["parity"], spec["variant"],
            spec["hidden_width"], spec["hidden_layers"], spec["activation"],
        )
    if kind == "linear":
        return InvertibleLinear(
            spec["index"], spec["width"], perm=spec["perm"], sign=spec["sign"],
            trainable=spec["trainable"],
        )
    if kind == "actnorm":
        return ActNorm(spec["index"], spec["width"])
    raise ConfigError(f"unknown layer kind {kind!r}")
