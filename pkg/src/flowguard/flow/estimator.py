"""scikit-learn style wrapper around :func:`build_flow` and :func:`train_flow`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from flowguard._validation import check_fitted, check_input
from flowguard.flow.model import build_flow
from flowguard.flow.train import TrainConfig, train_flow


class CouplingFlow(TransformerMixin, BaseEstimator):
    """Affine-coupling flow. ``transform`` maps data to latent codes."""

    def __init__(self, n_blocks=8, hidden_width=64, hidden_layers=2, scaling="half_sigmoid",
                 mix_every=2, actnorm=True, iterations=2000, batch_size=256, learning_rate=1e-3,
                 learning_rate_late=3e-4, lr_switch=1500, random_state=0):
        self.n_blocks = n_blocks
        self.hidden_width = hidden_width
        self.hidden_layers = hidden_layers
        self.scaling = scaling
        self.mix_every = mix_every
        self.actnorm = actnorm
        self.iterations = iterations
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.learning_rate_late = learning_rate_late
        self.lr_switch = lr_switch
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_input(X)
        model = build_flow(
            X.shape[1], n_blocks=self.n_blocks, hidden_width=self.hidden_width,
            hidden_layers=self.hidden_layers, scaling=self.scaling, mix_every=self.mix_every,
            actnorm=self.actnorm, seed=self.random_state, init_data=X,
        )
        cfg = TrainConfig(iterations=self.iterations, batch_size=self.batch_size,
                          lr=self.learning_rate, lr_late=self.learning_rate_late,
                          lr_switch=self.lr_switch, seed=self.random_state)
        self.model_, self.loss_trace_ = train_flow(model, X, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    @classmethod
    def from_model(cls, model):
        est = cls(n_blocks=model.n_blocks, scaling=model.variant, iterations=0)
        est.model_, est.loss_trace_ = model, []
        est.n_features_in_ = model.d
        return est

    def transform(self, X):
        check_fitted(self, "model_")
        return self.model_.forward(check_input(X, self.n_features_in_), check=False).z

    def inverse_transform(self, Z):
        check_fitted(self, "model_")
        return self.model_.inverse(check_input(Z, self.n_features_in_), check=False)

    def score_samples(self, X):
        """Per-sample log-density."""
        check_fitted(self, "model_")
        return self.model_.log_density(check_input(X, self.n_features_in_), check=False)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))
