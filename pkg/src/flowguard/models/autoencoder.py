"""Dense autoencoder baseline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from flowguard._validation import check_fitted, check_input
from flowguard.errors import ContractError, TrainingError
from flowguard.numcore.mlp import init_mlp, mlp_forward
from flowguard.numcore.optim import AdamState, adam_step
from flowguard.numcore.rng import Rng
from flowguard.numcore.serialize import load_weights, save_weights
from flowguard.numcore.tensor import Graph, Tensor, no_grad


class Autoencoder(TransformerMixin, BaseEstimator):
    """Encoder ``d -> bottleneck`` and decoder ``bottleneck -> d``, trained on MSE.

    ``hidden`` lists encoder hidden widths; the decoder mirrors them.
    ``transform`` encodes, ``inverse_transform`` decodes.
    """

    def __init__(self, bottleneck=4, hidden=(64,), activation="tanh", n_iter=1000,
                 batch_size=128, learning_rate=3e-3, random_state=0):
        self.bottleneck = bottleneck
        self.hidden = hidden
        self.activation = activation
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _init(self, d):
        if not 1 <= self.bottleneck <= d:
            raise ContractError(f"bottleneck {self.bottleneck} must be in [1, {d}]")
        rng = Rng(self.random_state).child("autoencoder-init")
        enc = [d, *self.hidden, self.bottleneck]
        params = init_mlp(rng.child("encoder"), enc, prefix="enc.")
        params.update(init_mlp(rng.child("decoder"), enc[::-1], prefix="dec."))
        self.params_ = params
        self.n_features_in_ = d

    def _encode(self, params, x):
        return mlp_forward(params, x, self.activation, prefix="enc.")

    def _decode(self, params, h):
        return mlp_forward(params, h, self.activation, prefix="dec.")

    def fit(self, X, y=None):
        X = check_input(X)
        self._init(X.shape[1])
        rng = Rng(self.random_state).child("autoencoder-batches")
        state = AdamState(lr=self.learning_rate)
        params = self.params_
        self.loss_trace_ = []
        batch = min(self.batch_size, len(X))
        for it in range(self.n_iter):
            idx = rng.integers(0, len(X), batch)
            graph = Graph(params)
            x = Tensor(X[idx])
            diff = self._decode(graph.leaves, self._encode(graph.leaves, x)) - x
            loss = (diff * diff).mean()
            if not np.isfinite(loss.data):
                raise TrainingError(it, self.loss_trace_[-1] if self.loss_trace_ else None)
            params, state = adam_step(state, params, graph.backward(loss))
            self.loss_trace_.append(float(loss.data))
        self.params_ = params
        return self

    def transform(self, X):
        check_fitted(self, "params_")
        X = check_input(X, width=self.n_features_in_)
        with no_grad():
            return self._encode(self.params_, Tensor(X)).data

    def inverse_transform(self, H):
        check_fitted(self, "params_")
        with no_grad():
            return self._decode(self.params_, Tensor(check_input(H, width=self.bottleneck))).data

    def reconstruct(self, X):
        return self.inverse_transform(self.transform(X))

    def reconstruction_mse(self, X):
        X = check_input(X, width=self.n_features_in_)
        return float(np.mean((self.reconstruct(X) - X) ** 2))

    def save(self, path):
        check_fitted(self, "params_")
        save_weights(self.params_, path, meta={"kind": "autoencoder", "config": self.get_params()})

    @classmethod
    def load(cls, path):
        params, meta = load_weights(path)
        if meta.get("kind") != "autoencoder":
            raise ContractError(f"{path} is not an autoencoder checkpoint")
        config = dict(meta["config"])
        config["hidden"] = tuple(config["hidden"])
        ae = cls(**config)
        ae.params_ = params
        ae.n_features_in_ = params["enc.w0"].shape[0]
        return ae


def train_ae(data, **config):
    return Autoencoder(**config).fit(getattr(data, "samples", data))
