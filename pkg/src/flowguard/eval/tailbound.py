"""Chernoff tail bound for the norm of a standard Gaussian vector.

For z ~ N(0, I_d) and eps in (0, 1)::

    P[|z| > sqrt(d (1 + eps))] <= exp(-d eps^2 / 8)
    P[|z| < sqrt(d (1 - eps))] <= exp(-d eps^2 / 8)

Setting the one-sided bound to 2^-s gives eps = sqrt(8 s ln 2 / d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from flowguard.errors import ContractError, DomainError


@dataclass(frozen=True)
class TailBound:
    d: int
    epsilon: float
    lower_radius: float
    upper_radius: float
    one_sided: float
    bound: float

    @property
    def bits(self):
        """``s`` such that the one-sided bound equals 2^-s."""
        return self.d * self.epsilon**2 / (8 * math.log(2))


def epsilon_from_bits(d, s):
    return math.sqrt(8 * s / (d * math.log2(math.e)))


def tail_bound(d, epsilon=None, s=None):
    if d < 1:
        raise ContractError(f"d must be positive, got {d}")
    if (epsilon is None) == (s is None):
        raise ContractError("give exactly one of epsilon or s")
    if s is not None:
        if s <= 0:
            raise ContractError(f"s must be positive, got {s}")
        epsilon = epsilon_from_bits(d, s)
        if epsilon >= 1:
            raise DomainError(f"s={s} with d={d} gives epsilon={epsilon:.6g} >= 1")
    if not 0 < epsilon < 1:
        raise ContractError(f"epsilon must lie in (0, 1), got {epsilon}")
    one_sided = math.exp(-d * epsilon**2 / 8)
    return TailBound(
        d=d,
        epsilon=epsilon,
        lower_radius=math.sqrt(d * (1 - epsilon)),
        upper_radius=math.sqrt(d * (1 + epsilon)),
        one_sided=one_sided,
        bound=2 * one_sided,
    )
