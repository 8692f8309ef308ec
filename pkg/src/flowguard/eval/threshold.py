from __future__ import annotations

import math

import numpy as np

from flowguard.detect.scores import decide
from flowguard.errors import ContractError


def pick_threshold(in_scores, target_tpr=0.95):
    """Threshold accepting at least ``target_tpr`` of the in-dist scores.

    Starts from the linearly interpolated quantile and raises it to the
    ceil(target * n)-th order statistic when interpolation would accept too few.
    """
    if not 0 < target_tpr <= 1:
        raise ContractError(f"target TPR must lie in (0, 1], got {target_tpr}")
    s = np.sort(np.asarray(in_scores, dtype=np.float64).ravel())
    if s.size == 0:
        raise ContractError("in-dist score set is empty")
    tau = float(np.quantile(s, target_tpr))
    need = math.ceil(target_tpr * s.size - 1e-12)
    return max(tau, float(s[need - 1]))


def rates_at(tau, in_scores, ood_scores):
    """``(tpr, fpr)``: fractions of in-dist and OOD scores accepted as in-dist."""
    tpr = float(np.mean(~decide(in_scores, tau)))
    fpr = float(np.mean(~decide(ood_scores, tau)))
    return tpr, fpr
