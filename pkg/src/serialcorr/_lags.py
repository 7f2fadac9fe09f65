"""Zero-padded lag matrices shared by the estimators and the baseline tests."""
import numpy as np


def lag_matrix(x: np.ndarray, k: int, first_lag: int = 1) -> np.ndarray:
    """``n x k`` matrix whose row ``t`` holds ``x_{t-first_lag}, ..., x_{t-first_lag-k+1}``
    with zeros before the start of the series."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.zeros((n, k))
    for j in range(k):
        s = first_lag + j
        if s < n:
            out[s:, j] = x[: n - s]
    return out
