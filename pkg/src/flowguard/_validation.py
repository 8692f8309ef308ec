"""Input validation shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted

from flowguard.errors import DimensionError


def check_input(X, width=None, dtype=np.float64):
    """2-D finite float array; ``width`` pins the number of columns."""
    samples = getattr(X, "samples", X)
    arr = check_array(samples, dtype=dtype, ensure_min_samples=1)
    if width is not None and arr.shape[1] != width:
        raise DimensionError(f"expected {width} features, got {arr.shape[1]}")
    return arr


def check_fitted(estimator, attribute):
    check_is_fitted(estimator, attribute)
