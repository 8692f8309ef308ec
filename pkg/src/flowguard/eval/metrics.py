"""Threshold-free detection metrics (OOD is the positive class)."""

from __future__ import annotations

import numpy as np

from flowguard.errors import ContractError


def _clean(scores, role):
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise ContractError(f"{role} score set is empty")
    # failure markers rank as most OOD
    return np.where(np.isnan(s), np.inf, s)


def auroc(in_scores, ood_scores):
    """P(OOD score > in-dist score) with ties counted half, in percent."""
    a = np.sort(_clean(in_scores, "in-dist"))
    b = _clean(ood_scores, "OOD")
    below = np.searchsorted(a, b, side="left")
    upto = np.searchsorted(a, b, side="right")
    # twice the Mann-Whitney U statistic, an exact integer
    u2 = int(below.sum()) + int(upto.sum())
    n2 = 2 * a.size * b.size
    if 2 * u2 <= n2:
        return 100.0 * u2 / n2
    return 100.0 - 100.0 * (n2 - u2) / n2


def aupr(in_scores, ood_scores):
    """Step-wise area under precision-recall, sweeping thresholds from the top."""
    a = _clean(in_scores, "in-dist")
    b = _clean(ood_scores, "OOD")
    scores = np.concatenate([a, b])
    positive = np.concatenate([np.zeros(a.size), np.ones(b.size)])
    order = np.argsort(-scores, kind="mergesort")
    scores, positive = scores[order], positive[order]
    # last index of each group of tied scores
    ends = np.flatnonzero(np.r_[scores[1:] != scores[:-1], True])
    tp = np.cumsum(positive)[ends]
    seen = ends + 1.0
    precision = tp / seen
    recall = tp / b.size
    gains = np.diff(np.r_[0.0, recall])
    return 100.0 * float(np.sum(gains * precision))
