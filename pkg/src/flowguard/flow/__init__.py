from flowguard.flow.checkpoint import load_flow, save_flow
from flowguard.flow.estimator import CouplingFlow
from flowguard.flow.layers import SCALINGS, ActNorm, CouplingBlock, InvertibleLinear, restricted_scale
from flowguard.flow.model import (
    FlowModel,
    LatentCode,
    build_flow,
    couple_forward,
    couple_inverse,
    forward,
    gaussian_log_density,
    inverse,
    log_density,
    model_from_arch,
    permutation_layer,
    resolve_precision,
)
from flowguard.flow.train import TrainConfig, train_flow

__all__ = [
    "SCALINGS", "ActNorm", "CouplingBlock", "CouplingFlow", "FlowModel", "InvertibleLinear",
    "LatentCode", "TrainConfig", "build_flow", "couple_forward", "couple_inverse", "forward",
    "gaussian_log_density", "inverse", "load_flow", "log_density", "model_from_arch",
    "permutation_layer", "resolve_precision", "restricted_scale", "save_flow", "train_flow",
]
