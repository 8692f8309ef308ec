"""Untargeted L-infinity PGD against a logit-producing classifier."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from flowguard.errors import ContractError
from flowguard.numcore.rng import as_rng


@dataclass(frozen=True)
class AttackBudget:
    """``step_size=None`` picks ``2.5 * epsilon / iterations``."""

    epsilon: float
    iterations: int = 100
    step_size: float | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ContractError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.iterations < 0:
            raise ContractError(f"iterations must be >= 0, got {self.iterations}")
        if self.step_size is not None and self.step_size > 2 * self.epsilon:
            raise ContractError(
                f"step size {self.step_size} exceeds 2*epsilon={2 * self.epsilon}"
            )

    @property
    def step(self):
        if self.step_size is not None:
            return float(self.step_size)
        return 2.5 * self.epsilon / max(self.iterations, 1)


@dataclass
class AdversarialSet:
    original: np.ndarray
    perturbed: np.ndarray
    labels: np.ndarray
    success: np.ndarray
    failed: np.ndarray
    budget: AttackBudget
    meta: dict = field(default_factory=dict)


def pgd_loss(logits, y_true, y_target):
    """``C_true(x) - C_target(x)`` per sample."""
    rows = np.arange(len(logits))
    return logits[rows, y_true] - logits[rows, y_target]


def runner_up(logits, y_true):
    masked = np.array(logits, dtype=np.float64, copy=True)
    masked[np.arange(len(masked)), y_true] = -np.inf
    return np.argmax(masked, axis=1)


def _project(x_adv, x, eps, domain):
    x_adv = np.clip(x_adv, x - eps, x + eps)
    if domain is not None:
        x_adv = np.clip(x_adv, domain[0], domain[1])
    return x_adv


def pgd_attack(classifier, x, y_true, budget, domain=(0.0, 1.0), random_start=False, seed=0):
    """Signed-gradient descent on ``C_true - C_target`` inside the epsilon cube.

    The target class is the clean input's runner-up and is fixed for the whole
    run. After every step the iterate is projected onto the cube around ``x``
    and onto ``domain``. Samples whose gradient goes non-finite are returned
    unchanged and flagged in ``failed``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y_true = np.asarray(y_true, dtype=np.int64)
    if len(y_true) != len(x):
        raise ContractError(f"{len(y_true)} labels for {len(x)} samples")
    eps, step = float(budget.epsilon), budget.step
    y_target = runner_up(classifier.decision_function(x), y_true)
    k = len(getattr(classifier, "classes_", [])) or int(max(y_true.max(), y_target.max())) + 1
    coef = np.zeros((len(x), k))
    coef[np.arange(len(x)), y_true] = 1.0
    coef[np.arange(len(x)), y_target] = -1.0

    x_adv = x.copy()
    if random_start and eps > 0:
        x_adv = _project(x + as_rng(seed).child("pgd-start").uniform(-eps, eps, x.shape), x, eps, domain)
    failed = np.zeros(len(x), dtype=bool)
    for _ in range(budget.iterations if eps > 0 else 0):
        grad = classifier.input_gradient(x_adv, coef)
        bad = ~np.all(np.isfinite(grad), axis=1)
        failed |= bad
        grad = np.where(bad[:, None], 0.0, grad)
        x_adv = _project(x_adv - step * np.sign(grad), x, eps, domain)
    x_adv[failed] = x[failed]
    success = classifier.predict(x_adv) != y_true
    meta = {"classifier_checksum": classifier_checksum(classifier)}
    return AdversarialSet(x, x_adv, y_true, success & ~failed, failed, budget, meta)


def attack_success_rate(adv):
    if len(adv.success) == 0:
        raise ContractError("success rate of an empty adversarial set")
    return float(np.mean(adv.success))


def classifier_checksum(classifier):
    params = getattr(classifier, "params_", {})
    h = hashlib.sha256()
    for name in sorted(params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(params[name]).tobytes())
    return h.hexdigest()[:16]
