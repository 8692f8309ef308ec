"""OOD score functions.

Every score is oriented so that larger means more out-of-distribution.
Scores are computed for a batch ``x`` of shape (n, d) and returned as an
array of shape (n,). Inputs whose round trip produces Inf/NaN get the
failure marker ``+inf``.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from flowguard.data.quantize import quantize
from flowguard.errors import ContractError
from flowguard.flow.model import gaussian_log_density, resolve_precision

FAILURE = np.inf
DETECTORS = ("ll", "ttl", "re", "pre", "waic", "llr", "comp", "msp", "ae")
# norms below this use the fallback radial direction e_1
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float = 50.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ContractError(f"penalty coefficient must be nonnegative, got {self.lam}")


def _batch(x):
    return np.atleast_2d(np.asarray(x, dtype=np.float64))


def _mark_failures(scores):
    scores = np.asarray(scores, dtype=np.float64)
    return np.where(np.isfinite(scores), scores, FAILURE)


def score_ll(model, x):
    """Negative log-density."""
    lp = model.log_density(_batch(x), check=False)
    return _mark_failures(-lp)


def score_ttl(model, x):
    """Distance of ``f(x)`` to the radius-sqrt(d) shell."""
    z = model.forward(_batch(x), check=False).z
    return _mark_failures(ttl_from_latent(z))


def ttl_from_latent(z):
    z = np.atleast_2d(z)
    return np.abs(np.linalg.norm(z, axis=1) - math.sqrt(z.shape[1]))


def penalty_xi(z, d=None):
    """``-sign(|z| - sqrt d) * ((|z| - sqrt d) / sqrt d)^2``, per row of ``z``."""
    z = np.atleast_2d(np.asarray(z))
    d = z.shape[1] if d is None else d
    if d < 1:
        raise ContractError(f"dimension must be >= 1, got {d}")
    root = math.sqrt(d)
    dev = np.linalg.norm(z, axis=1) - root
    return -np.sign(dev) * (dev / root) ** 2


def radial_direction(z):
    """``z / |z|`` per row; rows with ``|z| < 1e-12`` get ``e_1``."""
    z = np.atleast_2d(z)
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    small = norms[:, 0] < ZERO_NORM
    safe = np.where(small[:, None], 1.0, norms)
    u = z / safe
    if np.any(small):
        e1 = np.zeros(z.shape[1], dtype=z.dtype)
        e1[0] = 1
        u[small] = e1
    return u


def shifted_reconstruction(model, x, shift, precision="single"):
    """``|x - f^-1(z + shift * z/|z|)|`` with ``z = f(x)``, at ``precision``.

    The maps run at ``precision``; the error is measured against the input as
    given, so casting ``x`` down is part of the round trip.

    ``shift`` is per-sample (broadcast). With ``shift == 0`` the latent code is
    inverted untouched, so the result is the plain reconstruction error.
    """
    dtype = resolve_precision(precision)
    x64 = _batch(x)
    xb = x64.astype(dtype)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        z = model.forward(xb, dtype, check=False).z
        shift = np.broadcast_to(np.asarray(shift, dtype=np.float64), (len(xb),))
        if np.any(shift != 0):
            step = (shift[:, None] * radial_direction(z.astype(np.float64))).astype(dtype)
            z = np.where(shift[:, None] != 0, z + step, z)
        x_rec = model.inverse(z, dtype, check=False)
        err = np.linalg.norm(x64 - x_rec.astype(np.float64), axis=1)
    return _mark_failures(err)


def score_re(model, x, precision="single"):
    """Reconstruction error ``|x - f^-1(f(x))|`` at the requested precision."""
    return shifted_reconstruction(model, x, 0.0, precision)


def score_pre(model, x, cfg=PenaltyConfig(), precision="single"):
    """Penalized reconstruction error.

    The latent code is pushed radially by ``lam * xi(z)`` before inverting;
    ``lam = 0`` (or a code already on the shell) reduces to :func:`score_re`.
    """
    lam = cfg.lam if isinstance(cfg, PenaltyConfig) else PenaltyConfig(float(cfg)).lam
    dtype = resolve_precision(precision)
    xb = _batch(x)
    if lam == 0:
        return score_re(model, xb, precision)
    with np.errstate(over="ignore", invalid="ignore"):
        z = model.forward(xb.astype(dtype), dtype, check=False).z.astype(np.float64)
        shift = lam * penalty_xi(z)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    scores = shifted_reconstruction(model, xb, shift, precision)
    bad = ~np.all(np.isfinite(z), axis=1)
    scores[bad] = FAILURE
    return scores


def decide(score, tau):
    """``True`` (OOD) iff ``score > tau``; non-finite scores count as OOD."""
    score = np.asarray(score, dtype=np.float64)
    return ~np.isfinite(score) | (score > tau)


def score_waic(ensemble, x):
    """``-(mean - population variance)`` of member log-densities."""
    xb = _batch(x)
    lps = np.stack([m.log_density(xb, check=False) for m in _members(ensemble)])
    with np.errstate(invalid="ignore", over="ignore"):
        score = -(lps.mean(axis=0) - lps.var(axis=0))
    score[~np.all(np.isfinite(lps), axis=0)] = FAILURE
    return _mark_failures(score)


def waic_from_logps(logps):
    """WAIC score from an (m, n) or (m,) array of member log-densities."""
    lps = np.asarray(logps, dtype=np.float64)
    return -(lps.mean(axis=0) - lps.var(axis=0))


def _members(ensemble):
    return getattr(ensemble, "members", ensemble)


def score_llr(model, background, x):
    """``-(log p(x) - log p0(x))`` against a background model."""
    xb = _batch(x)
    if model.d != background.d:
        raise ContractError(f"model width {model.d} differs from background width {background.d}")
    with np.errstate(invalid="ignore", over="ignore"):
        return _mark_failures(
            -(model.log_density(xb, check=False) - background.log_density(xb, check=False))
        )


def deflate_bits(data):
    """Length in bits of the zlib (deflate) encoding of ``data`` at level 9."""
    return 8 * len(zlib.compress(bytes(data), 9))


def compressed_bits(x, compressor=deflate_bits, value_range=(0.0, 1.0)):
    """Per-sample compressed length of the 8-bit quantized representation.

    Coordinates are mapped affinely from ``value_range`` to [0, 1) and clipped.
    """
    xb = _batch(x)
    lo, hi = value_range
    u = np.clip((xb - lo) / (hi - lo), 0.0, np.nextafter(1.0, 0.0))
    return np.array([compressor(quantize(row)) for row in u], dtype=np.float64)


def score_comp(model, x, compressor=deflate_bits, value_range=(0.0, 1.0)):
    """``-(log p(x) + |B(x)| / d)`` with ``|B(x)|`` in bits."""
    xb = _batch(x)
    bits = compressed_bits(xb, compressor, value_range)
    lp = model.log_density(xb, check=False)
    return _mark_failures(-(lp + bits / xb.shape[1]))


def softmax(logits):
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def msp_from_logits(logits):
    return -softmax(logits).max(axis=1)


def score_msp(classifier, x):
    """Negative maximum softmax probability."""
    return _mark_failures(msp_from_logits(classifier.decision_function(_batch(x))))


def score_ae(ae, x):
    """Euclidean autoencoder reconstruction error."""
    xb = _batch(x)
    return _mark_failures(np.linalg.norm(xb - ae.reconstruct(xb), axis=1))
