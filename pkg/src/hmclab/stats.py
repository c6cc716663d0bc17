"""Estimators and hypothesis tests that turn limit theorems into pass/fail checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

DEFAULT_THRESHOLD = 0.001
SE_RULE = 4.0  # moment agreement rule: |estimate - target| <= 4 standard errors


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    se: float
    n_samples: int

    def within(self, target: float, factor: float = SE_RULE, allowance: float = 0.0) -> bool:
        """|value - target| <= factor * se + allowance."""
        return abs(self.value - target) <= factor * self.se + allowance


@dataclass(frozen=True)
class TestVerdict:
    statistic: float
    p_value: float
    passed: bool
    threshold: float


def empirical_moment(samples, order: float = 1.0) -> EstimateWithError:
    """Mean of x^order with the plug-in standard error."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    powered = x**order
    value = float(np.mean(powered))
    se = float(np.std(powered, ddof=1) / np.sqrt(x.size))
    return EstimateWithError(value=value, se=se, n_samples=int(x.size))


def mean_estimate(samples) -> EstimateWithError:
    return empirical_moment(samples, order=1.0)


def jackknife_ratio(numerator, denominator, power: float = 2.0) -> EstimateWithError:
    """Delete-one jackknife for mean(numerator) / mean(denominator)^power."""
    num = np.asarray(numerator, dtype=np.float64)
    den = np.asarray(denominator, dtype=np.float64)
    if num.size != den.size or num.size < 2:
        raise ValueError("need two equal-length arrays with at least 2 samples")
    size = num.size
    full = np.mean(num) / np.mean(den) ** power
    loo = ((num.sum() - num) / (size - 1)) / (((den.sum() - den) / (size - 1)) ** power)
    se = float(np.sqrt((size - 1) / size * np.sum((loo - np.mean(loo)) ** 2)))
    return EstimateWithError(value=float(full), se=se, n_samples=int(size))


def ks_two_sample(a, b, threshold: float = DEFAULT_THRESHOLD) -> TestVerdict:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 50 or b.size < 50:
        raise ValueError(f"both samples need >= 50 entries, got {a.size} and {b.size}")
    result = sps.ks_2samp(a, b, mode="asymp")
    return TestVerdict(
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        passed=bool(result.pvalue > threshold),
        threshold=threshold,
    )


def chi_square_gof(observed, expected_probs, threshold: float = DEFAULT_THRESHOLD) -> TestVerdict:
    """Chi-square goodness of fit with bins merged to expected count >= 5.

    The two smallest expected bins are merged repeatedly until every bin has
    expected count >= 5; degrees of freedom follow the merged bin count.
    """
    obs = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    if obs.shape != probs.shape:
        raise ValueError("observed and expected_probs must have the same shape")
    total = obs.sum()
    probs = probs / probs.sum()
    exp = list(total * probs)
    cnt = list(obs)
    while len(cnt) > 1 and min(exp) < 5.0:
        order = np.argsort(exp)
        i, j = int(order[0]), int(order[1])
        exp[j] += exp[i]
        cnt[j] += cnt[i]
        del exp[i], cnt[i]
    if len(cnt) < 2:
        raise ValueError("cannot form at least two bins with expected count >= 5")
    exp = np.array(exp)
    cnt = np.array(cnt)
    stat = float(np.sum((cnt - exp) ** 2 / exp))
    dof = len(cnt) - 1
    p = float(sps.chi2.sf(stat, dof))
    return TestVerdict(statistic=stat, p_value=p, passed=bool(p > threshold), threshold=threshold)
