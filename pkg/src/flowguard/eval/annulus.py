"""Latent-norm analysis: the Gaussian annulus and partitioned norms."""

from __future__ import annotations

import math

import numpy as np

from flowguard.errors import ContractError
from flowguard.numcore.rng import as_rng


def _latent(model, data):
    x = np.atleast_2d(np.asarray(getattr(data, "samples", data), dtype=np.float64))
    if model is None:
        return x
    return model.forward(x, check=False).z


def annulus_summary(norms, d):
    norms = np.asarray(norms, dtype=np.float64)
    root = math.sqrt(d)
    median = float(np.median(norms))
    return {
        "norms": norms,
        "median": median,
        "sqrt_d": root,
        "relative_deviation": (median - root) / root,
    }


def annulus_stats(model, data):
    """Latent norms of ``data`` plus their median and the shell radius sqrt(d).

    With ``model=None`` the rows of ``data`` are taken as latent codes.
    """
    z = _latent(model, data)
    return annulus_summary(np.linalg.norm(z, axis=1), z.shape[1])


def gaussian_norms(d, n, seed=0, chunk=4096):
    """Norms of ``n`` draws from N(0, I_d), generated in fixed-size chunks."""
    rng = as_rng(seed).child("gaussian-norms")
    out = np.empty(n)
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        out[start:start + m] = np.linalg.norm(rng.normal(size=(m, d)), axis=1)
    return out


def _check_split(split, d):
    da, db = (int(v) for v in split)
    if da < 0 or db < 0 or da + db != d:
        raise ContractError(f"split {tuple(split)} must be two nonnegative parts summing to d={d}")
    return da, db


def partitioned_norms(model, data, split):
    """Per-sample ``(|z_a|, |z_b|)`` for a contiguous-prefix split of the latent code."""
    z = _latent(model, data)
    da, _ = _check_split(split, z.shape[1])
    return np.linalg.norm(z[:, :da], axis=1), np.linalg.norm(z[:, da:], axis=1)


def cancel_latent(z, split, beta=None, alpha=None, target_norm=None):
    """Rescale the two latent parts so their norm deviations cancel.

    Returns ``[alpha * z_a, beta * z_b]`` with one factor given and the other
    solved so the result has norm ``target_norm`` (default sqrt(d); may be
    per-row). Exactly one of ``alpha`` and ``beta`` must be given.
    """
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    n, d = z.shape
    da, _ = _check_split(split, d)
    if (alpha is None) == (beta is None):
        raise ContractError("give exactly one of alpha or beta")
    target = np.broadcast_to(
        np.asarray(math.sqrt(d) if target_norm is None else target_norm, dtype=np.float64), (n,)
    )
    a2 = np.sum(z[:, :da] ** 2, axis=1)
    b2 = np.sum(z[:, da:] ** 2, axis=1)
    if beta is not None:
        beta = np.broadcast_to(np.asarray(beta, dtype=np.float64), (n,))
        rest = target**2 - beta**2 * b2
        if np.any(rest < 0) or np.any(a2 == 0):
            raise ContractError("beta too large to reach the target norm")
        alpha = np.sqrt(rest / a2)
    else:
        alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (n,))
        rest = target**2 - alpha**2 * a2
        if np.any(rest < 0) or np.any(b2 == 0):
            raise ContractError("alpha too large to reach the target norm")
        beta = np.sqrt(rest / b2)
    out = z.copy()
    out[:, :da] *= alpha[:, None]
    out[:, da:] *= beta[:, None]
    return out


def norm_cancellation_set(model, data, split=None, beta=0.25):
    """OOD inputs whose latent codes keep their norm but not their shape.

    Each in-dist code is rescaled by :func:`cancel_latent` with its own norm
    as the target, then pulled back through the inverse flow.
    Returns ``(x_ood, z_adv)``.
    """
    z = _latent(model, data)
    d = z.shape[1]
    if split is None:
        da = max(1, min(d - 1, round(d * 7 / 8)))
        split = (da, d - da)
    z_adv = cancel_latent(z, split, beta=beta, target_norm=np.linalg.norm(z, axis=1))
    return model.inverse(z_adv, check=False), z_adv


def norm_histogram(norms_in, norms_ood, bins=50):
    """Shared-edge histogram of two norm populations."""
    from flowguard.eval.report import histogram

    return histogram(norms_in, norms_ood, bins)
