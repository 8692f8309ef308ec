"""Maximum-likelihood training of a flow with Adam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from flowguard.errors import DimensionError, TrainingError
from flowguard.flow.model import gaussian_log_density_tensor
from flowguard.numcore.optim import AdamState, adam_step
from flowguard.numcore.rng import as_rng
from flowguard.numcore.tensor import Graph, Tensor


@dataclass
class TrainConfig:
    """Two-stage learning-rate schedule: ``lr`` until ``lr_switch``, then ``lr_late``."""

    iterations: int = 2000
    batch_size: int = 256
    lr: float = 1e-3
    lr_late: float = 3e-4
    lr_switch: int = 1500
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0


def _samples(data):
    samples = getattr(data, "samples", data)
    return np.asarray(samples, dtype=np.float64)


def train_flow(model, data, config=None):
    """Fit ``model`` by maximizing the mean log-density of ``data``.

    Returns ``(trained_model, loss_trace)`` where the trace holds the batch
    mean negative log-likelihood (nats) at each iteration.
    """
    config = config or TrainConfig()
    x = _samples(data)
    if x.ndim != 2 or x.shape[1] != model.d:
        raise DimensionError(f"data has shape {x.shape}, model expects width {model.d}")
    rng = as_rng(config.seed).child("train-batches")
    names = model.trainable_names()
    params = {k: model.params[k] for k in names}
    frozen = {k: v for k, v in model.params.items() if k not in params}
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    trace = []
    last_finite = None
    batch = min(config.batch_size, len(x))
    for it in range(config.iterations):
        idx = rng.integers(0, len(x), batch)
        graph = Graph(params)
        z, log_det, _ = model.forward_tensor(Tensor(x[idx]), {**frozen, **graph.leaves}, check=False)
        loss = -gaussian_log_density_tensor(z, log_det).mean()
        value = float(loss.data)
        if not np.isfinite(value):
            raise TrainingError(it, last_finite)
        grads = graph.backward(loss)
        if not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingError(it, last_finite)
        state.lr = config.lr if it < config.lr_switch else config.lr_late
        params, state = adam_step(state, params, grads)
        trace.append(value)
        last_finite = value
    return model.with_params(params), trace
