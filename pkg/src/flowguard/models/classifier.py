"""Dense softmax classifier used for MSP scoring and as the PGD target."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from flowguard._validation import check_fitted, check_input
from flowguard.errors import ContractError, TrainingError
from flowguard.numcore.mlp import init_mlp, mlp_forward
from flowguard.numcore.optim import AdamState, adam_step
from flowguard.numcore.rng import Rng
from flowguard.numcore.serialize import load_weights, save_weights
from flowguard.numcore.tensor import Graph, Tensor, no_grad


def _log_softmax(logits):
    top = Tensor(logits.data.max(axis=1, keepdims=True))
    shifted = logits - top
    return shifted - shifted.exp().sum(axis=1, keepdims=True).log()


class DenseClassifier(ClassifierMixin, BaseEstimator):
    """MLP classifier trained with cross-entropy and Adam.

    ``hidden=()`` gives a linear (multinomial logistic) model.
    """

    def __init__(self, hidden=(64, 64), activation="relu", n_classes=None, n_iter=500,
                 batch_size=128, learning_rate=1e-2, random_state=0):
        self.hidden = hidden
        self.activation = activation
        self.n_classes = n_classes
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _init(self, d, k):
        sizes = [d, *self.hidden, k]
        self.params_ = init_mlp(Rng(self.random_state).child("classifier-init"), sizes)
        self.n_features_in_ = d
        self.classes_ = np.arange(k)

    def fit(self, X, y):
        X = check_input(X)
        y = np.asarray(y)
        if y.shape != (len(X),):
            raise ContractError(f"need one label per sample, got {y.shape} for {len(X)} samples")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise ContractError("labels must be integers")
            y = y.astype(np.int64)
        k = int(self.n_classes) if self.n_classes is not None else int(y.max()) + 1
        bad = np.flatnonzero((y < 0) | (y >= k))
        if bad.size:
            raise ContractError(f"label {y[bad[0]]} at index {bad[0]} outside [0, {k})")
        self._init(X.shape[1], k)
        rng = Rng(self.random_state).child("classifier-batches")
        state = AdamState(lr=self.learning_rate)
        onehot = np.eye(k)[y]
        self.loss_trace_, self.accuracy_trace_ = [], []
        batch = min(self.batch_size, len(X))
        params = self.params_
        for it in range(self.n_iter):
            idx = rng.integers(0, len(X), batch)
            graph = Graph(params)
            logits = mlp_forward(graph.leaves, Tensor(X[idx]), self.activation)
            loss = -(_log_softmax(logits) * onehot[idx]).sum() * (1.0 / batch)
            if not np.isfinite(loss.data):
                raise TrainingError(it, self.loss_trace_[-1] if self.loss_trace_ else None)
            params, state = adam_step(state, params, graph.backward(loss))
            self.loss_trace_.append(float(loss.data))
            self.accuracy_trace_.append(float(np.mean(logits.data.argmax(axis=1) == y[idx])))
        self.params_ = params
        self.train_accuracy_ = float(np.mean(self.predict(X) == y))
        return self

    def decision_function(self, X):
        """Logits, shape (n, k)."""
        check_fitted(self, "params_")
        X = check_input(X, width=self.n_features_in_)
        with no_grad():
            return mlp_forward(self.params_, Tensor(X), self.activation).data

    def predict_proba(self, X):
        logits = self.decision_function(X)
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def input_gradient(self, X, coef):
        """Gradient of ``sum_i coef[n, i] * logits[n, i]`` with respect to each row of X."""
        check_fitted(self, "params_")
        X = check_input(X, width=self.n_features_in_)
        x = Tensor(X, requires_grad=True)
        logits = mlp_forward(self.params_, x, self.activation)
        (logits * np.asarray(coef, dtype=np.float64)).sum().backward()
        return x.grad

    def save(self, path):
        check_fitted(self, "params_")
        save_weights(self.params_, path, meta={"kind": "classifier", "config": self.get_params()})

    @classmethod
    def load(cls, path):
        params, meta = load_weights(path)
        if meta.get("kind") != "classifier":
            raise ContractError(f"{path} is not a classifier checkpoint")
        config = dict(meta["config"])
        config["hidden"] = tuple(config["hidden"])
        clf = cls(**config)
        clf.params_ = params
        depth = sum(1 for k in params if k.startswith("w"))
        clf.n_features_in_ = params["w0"].shape[0]
        clf.classes_ = np.arange(params[f"w{depth - 1}"].shape[1])
        return clf


def predict(classifier, x):
    """``(labels, softmax)`` for a batch."""
    proba = classifier.predict_proba(x)
    return np.argmax(proba, axis=1), proba
