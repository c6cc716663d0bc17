"""Numba inner loops (optional fast path for the coefficient recurrence).

Import of this module fails cleanly when numba is not installed; callers
fall back to the numpy implementation.  Strict IEEE arithmetic (no fastmath)
so results are reproducible and agree with the reference to rounding.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def exp_series_batch(weights, n):
    """Coefficients of exp of a power series, batched over rows.

    weights[r, k-1] holds sqrt(theta * k) * N_k for replica r; returns
    C with C[r, m] = c_m via m c_m = sum_k weights[r, k-1] c_{m-k}.
    """
    rows = weights.shape[0]
    out = np.zeros((rows, n + 1), dtype=np.complex128)
    for r in prange(rows):
        out[r, 0] = 1.0
        for m in range(1, n + 1):
            acc = 0.0 + 0.0j
            for k in range(1, m + 1):
                acc += weights[r, k - 1] * out[r, m - k]
            out[r, m] = acc / m
    return out
