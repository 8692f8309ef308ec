"""Synthetic in-distribution manifolds and OOD families.

All generators return samples inside the unit cube [0, 1)^d so that the
same quantization, attack domain and noise families apply to every dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from flowguard.errors import ConfigError, ContractError
from flowguard.numcore.rng import Rng

INDIST_NAMES = ("ring", "moons", "gauss_mixture", "grid8")
OOD_NAMES = ("uniform", "shifted_mixture", "noise")


@dataclass
class DatasetHandle:
    samples: np.ndarray
    tag: str
    seed: int = 0
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise ContractError(f"samples must be 2-D (n, d), got shape {self.samples.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if len(self.labels) != len(self.samples):
                raise ContractError(
                    f"{len(self.labels)} labels for {len(self.samples)} samples"
                )

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def d(self):
        return self.samples.shape[1]

    def subset(self, index):
        labels = None if self.labels is None else self.labels[index]
        return DatasetHandle(self.samples[index], self.tag, self.seed, labels, dict(self.meta))


@dataclass(frozen=True)
class NoiseSpec:
    kappa: int
    height: int
    width: int
    channels: int = 1

    @property
    def d(self):
        return self.height * self.width * self.channels


def _check_n(n):
    if n < 1:
        raise ConfigError(f"sample count must be at least 1, got {n}")


def _embed(rng, plane, n, d, noise):
    """Place 2-D points in the first two coordinates, Gaussian noise elsewhere."""
    x = np.empty((n, d))
    x[:, :2] = plane
    if d > 2:
        x[:, 2:] = 0.5 + noise * rng.normal(size=(n, d - 2))
    return x


def ring(n, d=16, seed=0, radius=0.35, noise=0.01):
    """Points on a circle of ``radius`` around (0.5, 0.5) plus normal-direction noise.

    Labels mark the upper (1) and lower (0) half of the circle.
    """
    _check_n(n)
    if d < 2:
        raise ConfigError("ring needs d >= 2")
    rng = Rng(seed).child("ring")
    theta = rng.uniform(0.0, 2 * math.pi, n)
    r = radius + noise * rng.normal(size=n) if noise > 0 else np.full(n, float(radius))
    plane = 0.5 + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    x = _embed(rng, plane, n, d, noise)
    labels = (np.sin(theta) > 0).astype(np.int64)
    meta = {"radius": radius, "noise": noise}
    return DatasetHandle(x, "indist:ring", seed, labels, meta)


def moons(n, d=2, seed=0, noise=0.01):
    _check_n(n)
    if d < 2:
        raise ConfigError("moons needs d >= 2")
    rng = Rng(seed).child("moons")
    labels = (rng.uniform(size=n) < 0.5).astype(np.int64)
    t = rng.uniform(0.0, math.pi, n)
    upper = np.stack([np.cos(t), np.sin(t)], axis=1)
    lower = np.stack([1 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    plane = np.where(labels[:, None] == 0, upper, lower)
    # map [-1, 2] x [-0.5, 1] into the unit square
    plane = (plane - [-1.0, -0.5]) / [3.0, 1.5] * 0.8 + 0.1
    plane = plane + noise * rng.normal(size=plane.shape)
    return DatasetHandle(_embed(rng, plane, n, d, noise), "indist:moons", seed, labels,
                         {"noise": noise})


def gauss_mixture(n, d=2, seed=0, components=4, spread=0.25, scale=0.03, shift=0.0,
                  tag="indist:gauss_mixture"):
    """Isotropic mixture with means on a circle of ``spread`` around the cube center."""
    _check_n(n)
    rng = Rng(seed).child("gauss_mixture")
    labels = rng.integers(0, components, n)
    angles = 2 * math.pi * np.arange(components) / components
    means = np.full((components, d), 0.5 + shift)
    means[:, 0] += spread * np.cos(angles)
    if d > 1:
        means[:, 1] += spread * np.sin(angles)
    x = means[labels] + scale * rng.normal(size=(n, d))
    meta = {"components": components, "spread": spread, "scale": scale, "shift": shift}
    return DatasetHandle(x, tag, seed, labels, meta)


def grid8(n, d=64, seed=0, dequantize=True):
    """8x8 single-channel images made of a few soft bars and blobs."""
    _check_n(n)
    if d != 64:
        raise ConfigError(f"grid8 is an 8x8 grid, d must be 64 (got {d})")
    rng = Rng(seed).child("grid8")
    yy, xx = np.mgrid[0:8, 0:8] / 7.0
    images = np.empty((n, 8, 8))
    for i in range(n):
        img = np.full((8, 8), 0.1)
        for _ in range(int(rng.integers(1, 4))):
            cx, cy = rng.uniform(0, 1, 2)
            width = rng.uniform(0.1, 0.3)
            if rng.uniform() < 0.5:
                angle = rng.uniform(0, math.pi)
                dist = (xx - cx) * math.cos(angle) + (yy - cy) * math.sin(angle)
            else:
                dist = np.hypot(xx - cx, yy - cy)
            img += 0.8 * np.exp(-0.5 * (dist / width) ** 2)
        images[i] = np.clip(img, 0.0, 255.0 / 256.0)
    x = images.reshape(n, 64)
    if dequantize:
        from flowguard.data.quantize import dequantize as _deq
        from flowguard.data.quantize import quantize as _q

        x = _deq(_q(x), seed=Rng(seed).child("dequantize")).reshape(n, 64)
    return DatasetHandle(x, "indist:grid8", seed, None, {"dequantized": dequantize})


_INDIST = {"ring": ring, "moons": moons, "gauss_mixture": gauss_mixture, "grid8": grid8}


def gen_indist(name, n, d, seed=0, **kwargs):
    try:
        fn = _INDIST[name]
    except KeyError:
        raise ConfigError(
            f"unknown in-distribution dataset {name!r}; supported: {', '.join(INDIST_NAMES)}"
        ) from None
    return fn(n, d=d, seed=seed, **kwargs)


def uniform_noise(n, d, seed=0):
    _check_n(n)
    x = Rng(seed).child("uniform").uniform(0.0, 1.0, (n, d))
    return DatasetHandle(x, "ood:uniform", seed)


def shifted_mixture(n, d, seed=0, components=8, scale=0.05, shift=0.1):
    """A wider Gaussian mixture displaced off the cube center in every coordinate."""
    handle = gauss_mixture(n, d, seed, components=components, spread=0.2, scale=scale,
                           shift=shift, tag="ood:shifted_mixture")
    handle.labels = None
    return handle


def _pool_upsample(grid, kappa):
    h, w = grid.shape[:2]
    out = np.empty_like(grid)
    for i in range(0, h, kappa):
        for j in range(0, w, kappa):
            window = grid[i:i + kappa, j:j + kappa]
            out[i:i + kappa, j:j + kappa] = window.mean(axis=(0, 1), keepdims=True)
    return out


def gen_noise_kappa(spec, n, seed=0):
    """Uniform noise, average-pooled with window kappa and upsampled back.

    Windows partition the grid with ceiling semantics (edge windows may be
    smaller); upsampling is nearest-neighbor, so kappa=1 is the raw draw.
    """
    _check_n(n)
    if spec.kappa < 1:
        raise ConfigError(f"kappa must be a positive integer, got {spec.kappa}")
    if spec.kappa > spec.height and spec.kappa > spec.width:
        raise ConfigError(
            f"kappa={spec.kappa} exceeds both grid extents ({spec.height}x{spec.width})"
        )
    rng = Rng(seed).child("noise-kappa")
    raw = rng.uniform(0.0, 1.0, (n, spec.height, spec.width, spec.channels))
    if spec.kappa == 1:
        pooled = raw
    else:
        pooled = np.stack([_pool_upsample(g, spec.kappa) for g in raw])
    meta = {"kappa": spec.kappa, "grid": [spec.height, spec.width, spec.channels]}
    return DatasetHandle(pooled.reshape(n, spec.d), f"ood:noise{spec.kappa}", seed, None, meta)


def gen_ood(name, n, d, seed=0, **kwargs):
    if name == "uniform":
        return uniform_noise(n, d, seed)
    if name == "shifted_mixture":
        return shifted_mixture(n, d, seed, **kwargs)
    if name == "noise":
        side = int(round(math.sqrt(d)))
        if side * side != d:
            raise ConfigError(f"noise needs a square grid; d={d} is not a perfect square")
        return gen_noise_kappa(NoiseSpec(kwargs.get("kappa", 1), side, side), n, seed)
    raise ConfigError(f"unknown OOD dataset {name!r}; supported: {', '.join(OOD_NAMES)}")


def corrupt_bernoulli(x, p=0.15, seed=0, low=0.0, high=1.0):
    """Replace each coordinate with a uniform draw in [low, high) with probability ``p``.

    Used to train the background model of the likelihood-ratio baseline.
    """
    rng = Rng(seed).child("bernoulli-corrupt")
    x = np.array(x, dtype=np.float64, copy=True)
    mask = rng.uniform(size=x.shape) < p
    x[mask] = rng.uniform(low, high, size=int(mask.sum()))
    return x


def balanced_pair(indist, ood, n_each, seed=0):
    """Draw ``n_each`` samples from each handle without replacement."""
    if indist.n < n_each or ood.n < n_each:
        raise ContractError(
            f"balanced evaluation needs {n_each} of each; have {indist.n} in-dist, {ood.n} OOD"
        )
    rng = Rng(seed).child("balanced")
    a = np.sort(rng.choice(indist.n, n_each, replace=False))
    b = np.sort(rng.choice(ood.n, n_each, replace=False))
    return indist.subset(a), ood.subset(b)
