"""Five-member flow ensemble used by the WAIC baseline."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from flowguard.data.generators import corrupt_bernoulli
from flowguard.errors import ContractError
from flowguard.flow.checkpoint import load_flow, save_flow
from flowguard.flow.model import build_flow
from flowguard.flow.train import TrainConfig, train_flow
from flowguard.numcore.rng import as_rng

MEMBER_VARIANTS = ("sigmoid", "half_sigmoid", "clip15", "additive", "background")


@dataclass
class DetectorEnsemble:
    members: list
    variants: tuple = MEMBER_VARIANTS

    def __post_init__(self):
        if len(self.members) != 5 or len(self.variants) != 5:
            raise ContractError(f"an ensemble has exactly five members, got {len(self.members)}")
        widths = {m.d for m in self.members}
        if len(widths) != 1:
            raise ContractError(f"ensemble members disagree on width: {sorted(widths)}")

    @property
    def d(self):
        return self.members[0].d

    def log_densities(self, x):
        return np.stack([m.log_density(x, check=False) for m in self.members])

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for variant, member in zip(self.variants, self.members):
            save_flow(member, directory / f"{variant}.fgw")

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        return cls([load_flow(directory / f"{v}.fgw") for v in MEMBER_VARIANTS])


def train_ensemble(data, config=None, seed=0, corruption=0.15, **arch):
    """One flow per coupling variant, plus a half_sigmoid background member.

    The background member is trained on Bernoulli-corrupted copies of ``data``.
    """
    x = np.asarray(getattr(data, "samples", data), dtype=np.float64)
    config = config or TrainConfig()
    root = as_rng(seed)
    members = []
    for variant in MEMBER_VARIANTS:
        train_x = x
        scaling = variant
        if variant == "background":
            train_x = corrupt_bernoulli(x, corruption, seed=root.child("background").derive_seed())
            scaling = "half_sigmoid"
        member_seed = root.child(variant).derive_seed()
        model = build_flow(x.shape[1], scaling=scaling, seed=member_seed, init_data=train_x, **arch)
        cfg = TrainConfig(**{**config.__dict__, "seed": member_seed})
        members.append(train_flow(model, train_x, cfg)[0])
    return DetectorEnsemble(members)
