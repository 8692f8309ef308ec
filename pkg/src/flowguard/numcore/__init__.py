from flowguard.numcore.mlp import init_mlp, mlp_forward
from flowguard.numcore.optim import AdamState, adam_step
from flowguard.numcore.rng import Rng, as_rng
from flowguard.numcore.serialize import dumps_weights, load_weights, loads_weights, save_weights
from flowguard.numcore.tensor import (
    Graph,
    Tensor,
    as_tensor,
    backward,
    concat,
    matmul,
    no_grad,
)

__all__ = [
    "AdamState", "Graph", "Rng", "Tensor", "adam_step", "as_rng", "as_tensor",
    "backward", "concat", "dumps_weights", "loads_weights", "init_mlp", "load_weights", "matmul", "mlp_forward",
    "no_grad", "save_weights",
]
