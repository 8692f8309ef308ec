"""Outlier-detector wrapper following scikit-learn's conventions.

``score_samples`` and ``decision_function`` are larger for inliers and
``predict`` returns +1 (in-dist) / -1 (OOD), as in sklearn's outlier
detectors. ``ood_score`` keeps the package orientation (larger = more OOD).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin

from flowguard._validation import check_fitted, check_input
from flowguard.detect import scores as S
from flowguard.errors import ConfigError
from flowguard.eval.threshold import pick_threshold
from flowguard.flow.estimator import CouplingFlow

FLOW_METHODS = ("ll", "ttl", "re", "pre")


class FlowOODDetector(OutlierMixin, BaseEstimator):
    def __init__(self, method="pre", lam=50.0, precision="single", target_tpr=0.95, flow=None):
        self.method = method
        self.lam = lam
        self.precision = precision
        self.target_tpr = target_tpr
        self.flow = flow

    def fit(self, X, y=None):
        if self.method not in FLOW_METHODS:
            raise ConfigError(
                f"unknown method {self.method!r}; supported: {', '.join(FLOW_METHODS)}"
            )
        X = check_input(X)
        flow = self.flow if self.flow is not None else CouplingFlow()
        if not hasattr(flow, "model_"):
            flow = flow.fit(X)
        self.flow_ = flow
        self.n_features_in_ = X.shape[1]
        self.threshold_ = pick_threshold(self.ood_score(X), self.target_tpr)
        return self

    def ood_score(self, X):
        check_fitted(self, "flow_")
        X = check_input(X, self.n_features_in_)
        model = self.flow_.model_
        if self.method == "ll":
            return S.score_ll(model, X)
        if self.method == "ttl":
            return S.score_ttl(model, X)
        if self.method == "re":
            return S.score_re(model, X, self.precision)
        return S.score_pre(model, X, S.PenaltyConfig(self.lam), self.precision)

    def score_samples(self, X):
        return -self.ood_score(X)

    def decision_function(self, X):
        check_fitted(self, "threshold_")
        return self.threshold_ - self.ood_score(X)

    def predict(self, X):
        check_fitted(self, "threshold_")
        return np.where(S.decide(self.ood_score(X), self.threshold_), -1, 1)
