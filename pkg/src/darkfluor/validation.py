"""Input checks shared by the fitting code and the estimator wrapper."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_consistent_length
from sklearn.utils.validation import column_or_1d


def check_detunings(x):
    """Accept shape (n,) or (n, 1) and return a strictly increasing 1-D float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError(f"expected a single detuning column, got shape {x.shape}")
        x = x[:, 0]
    x = column_or_1d(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("detunings contain NaN or infinity")
    if x.size > 1 and np.any(np.diff(x) <= 0):
        raise ValueError("detunings must be strictly increasing")
    return x


def check_spectrum(detunings, counts, count_errors=None):
    x = check_detunings(detunings)
    y = column_or_1d(np.asarray(counts, dtype=float))
    check_consistent_length(x, y)
    if not np.all(np.isfinite(y)):
        raise ValueError("counts contain NaN or infinity")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    s = None
    if count_errors is not None:
        s = column_or_1d(np.asarray(count_errors, dtype=float))
        check_consistent_length(x, s)
        if np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("count errors must be positive and finite")
    return x, y, s
