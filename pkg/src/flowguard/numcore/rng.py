"""Seeded, splittable random streams.

Every stream is a numpy ``Generator`` over the Philox-4x64 counter-based bit
generator. Child streams are keyed by name so that e.g. data generation and
weight initialization never share draws.
"""

from __future__ import annotations

import zlib

import numpy as np

ALGORITHM = "philox4x64"


def _name_key(name):
    return zlib.crc32(str(name).encode("utf-8"))


class Rng:
    algorithm = ALGORITHM

    def __init__(self, seed, path=()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.path = tuple(path)
        seq = np.random.SeedSequence(seed, spawn_key=tuple(_name_key(p) for p in self.path))
        self._seq = seq
        self.generator = np.random.Generator(np.random.Philox(seq))

    def child(self, name):
        return Rng(self.seed, self.path + (name,))

    def derive_seed(self):
        """A plain integer seed unique to this stream's path."""
        return int(self._seq.generate_state(1, np.uint64)[0] >> np.uint64(1))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self.generator.choice(a, size=size, replace=replace)

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path!r}, algorithm={ALGORITHM!r})"


def as_rng(seed_or_rng):
    if isinstance(seed_or_rng, Rng):
        return seed_or_rng
    return Rng(0 if seed_or_rng is None else seed_or_rng)
