"""8-bit quantization and uniform dequantization."""

from __future__ import annotations

import numpy as np

from flowguard.errors import ContractError
from flowguard.numcore.rng import as_rng


def quantize(x, bins=256):
    """``floor(x * bins)`` clamped to ``[0, bins - 1]``, as bytes.

    Every coordinate must lie in [0, 1).
    """
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1)
    bad = np.flatnonzero(~((flat >= 0.0) & (flat < 1.0)))
    if bad.size:
        i = int(bad[0])
        raise ContractError(f"coordinate at index {i} = {float(flat[i])!r} lies outside [0, 1)")
    if not 2 <= bins <= 256:
        raise ContractError(f"bins must be in [2, 256], got {bins}")
    q = np.clip(np.floor(flat * bins), 0, bins - 1).astype(np.uint8)
    return q.tobytes()


def dequantize(data, seed=0, bins=256, shape=None):
    """``(byte + u) / bins`` with ``u ~ U[0, 1)`` drawn from the seeded stream."""
    q = np.frombuffer(bytes(data), dtype=np.uint8).astype(np.float64)
    u = as_rng(seed).child("dequantize-noise").uniform(0.0, 1.0, q.shape)
    x = (q + u) / bins
    return x if shape is None else x.reshape(shape)
