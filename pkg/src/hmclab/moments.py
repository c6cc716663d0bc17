"""Closed-form moments used as deterministic oracles by the statistical tests."""

from __future__ import annotations

import numpy as np
from scipy.special import factorial, gammaln

from .ewens import prob_longest_at_most


class MomentBlowupError(ValueError):
    """A moment was requested outside its finite range (p * theta >= 1)."""


def second_moment(n, theta: float):
    """E |c_n|^2 = binom(n + theta - 1, theta - 1), via log-gamma.

    Vectorized over n; returns a float for scalar input.
    """
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    n_arr = np.asarray(n, dtype=np.float64)
    if np.any(n_arr < 0):
        raise ValueError("n must be nonnegative")
    out = np.exp(gammaln(n_arr + theta) - gammaln(theta) - gammaln(n_arr + 1.0))
    return float(out) if np.isscalar(n) or n_arr.ndim == 0 else out


def truncated_covariance(n: int, q: int, q1: int, q2: int, theta: float) -> float:
    """E( c_{n-q, q1} * conj(c_{n-q, q2}) ), a real nonnegative number.

    Equals binom(n-q+theta-1, theta-1) * P(longest Ewens cycle of n-q symbols
    <= min(q1, q2)).
    """
    if not 0 <= q <= n:
        raise ValueError(f"need 0 <= q <= n, got q={q}, n={n}")
    if q1 < 0 or q2 < 0:
        raise ValueError("truncation levels must be nonnegative")
    m = n - q
    q_min = min(q1, q2)
    if m == 0:
        return 1.0
    if q_min == 0:
        return 0.0
    return second_moment(m, theta) * prob_longest_at_most(m, q_min, theta)


def gmc_mass_moment(p: float, theta: float) -> float:
    """E(M_theta^p) = Gamma(1 - p theta) / Gamma(1 - theta)^p for p theta < 1."""
    p = float(p)
    theta = float(theta)
    if p <= 0:
        raise ValueError(f"moment order must be positive, got {p}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if p * theta >= 1.0:
        raise MomentBlowupError(f"E(M^p) diverges for p*theta >= 1 (got p={p}, theta={theta})")
    return float(np.exp(gammaln(1.0 - p * theta) - p * gammaln(1.0 - theta)))


def limit_abs_moment(p: int, theta: float) -> float:
    """E |sqrt(M_theta) Z|^{2p} = p! * Gamma(1 - p theta) / Gamma(1 - theta)^p.

    Z standard complex normal independent of the mass, so E|Z|^{2p} = p!.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    return float(factorial(int(p))) * gmc_mass_moment(float(p), theta)
