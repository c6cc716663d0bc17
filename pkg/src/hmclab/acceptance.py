"""Acceptance suite: exact identities plus seeded statistical convergence checks.

Each criterion is a standalone function returning a CriterionResult with one
human-readable line per sub-check.  The suite is deterministic for a given
seed: every criterion owns a disjoint replica range, so criteria can run in
any order or in parallel without changing any number.

Moment-agreement checks use the global four-standard-error rule; hypothesis
tests use the global 0.001 threshold.  The "quick" level divides Monte Carlo
sample counts by 10 (floor 200) and changes nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cbe import cbe_rejection_ensemble, cbe_secular_ensemble, secular_from_angles
from .ewens import (
    CycleCounts,
    a_constant,
    c_delta_closed,
    c_delta_integral,
    ewens_pmf,
    ewens_sample_matrix,
    longest_cycle_samples,
    p_theta_density,
    t0n_laplace_limit,
    t0n_samples,
)
from .gmc import limit_law_ensemble
from .moments import limit_abs_moment, second_moment, truncated_covariance
from .rng import GaussianDraw, Lane, StreamKey
from .series import (
    TestPolynomial,
    block_martingale_ensemble,
    block_schedule,
    coefficient_ensemble,
    hmc_coefficients,
    hmc_coefficients_bruteforce,
    truncated_ensemble,
)
from .stats import DEFAULT_THRESHOLD, chi_square_gof, ks_two_sample, mean_estimate
from .ewens import EULER_GAMMA
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

DEFAULT_SEED = 20260810
_QUICK_DIV = 10
_REPLICA_STRIDE = 10**7  # disjoint replica range per criterion


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    lines: list = field(default_factory=list)

    def summary(self) -> str:
        return f"criterion {self.index:02d} [{'PASS' if self.passed else 'FAIL'}] {self.name}"


def _samples(full: int, level: str) -> int:
    if level == "full":
        return full
    if level == "quick":
        return max(200, full // _QUICK_DIV)
    raise ValueError(f"unknown level {level!r}")


def _key(seed: int, index: int, lane: Lane, offset: int = 0) -> StreamKey:
    return StreamKey(seed, replica=index * _REPLICA_STRIDE + offset, lane=lane)


# ---------------------------------------------------------------------------
# 1. Oracle equivalence of the recurrence and the composition sum
# ---------------------------------------------------------------------------


def _criterion_1(seed: int, level: str) -> CriterionResult:
    draws = _samples(200, level)
    n_max = 12
    worst = 0.0
    r = 0
    base = _key(seed, 1, Lane.HMC)
    for theta in (0.25, 0.5, 0.9):
        for _ in range(draws):
            d = GaussianDraw.sample(base.with_replica(base.replica + r), n_max)
            r += 1
            rec = hmc_coefficients(d, theta, n_max).values
            oracle = hmc_coefficients_bruteforce(d, theta, n_max).values
            worst = max(worst, float(np.max(np.abs(rec - oracle) / (1.0 + np.abs(oracle)))))
    passed = worst <= 1e-10
    lines = [f"recurrence vs composition sum, n<=12, {draws} draws x 3 theta: worst rel err {worst:.3e} (tol 1e-10)"]
    return CriterionResult(1, "oracle equivalence", passed, lines)


# ---------------------------------------------------------------------------
# 2. Exact second-moment identity
# ---------------------------------------------------------------------------


def _criterion_2(seed: int, level: str) -> CriterionResult:
    n = 64
    samples = _samples(20_000, level)
    lines, passed = [], True
    for j, theta in enumerate((0.3, 0.6, 0.9)):
        key = _key(seed, 2, Lane.HMC, offset=j * samples)
        c = coefficient_ensemble(theta, n, samples, key)[:, 0]
        est = mean_estimate(np.abs(c) ** 2 / second_moment(n, theta))
        ok = est.within(1.0)
        passed &= ok
        lines.append(
            f"theta={theta}: E|c_{n}|^2 / exact = {est.value:.5f} +- {est.se:.5f} "
            f"({samples} samples) {'ok' if ok else 'OUT OF RANGE'}"
        )
    return CriterionResult(2, "second-moment identity", passed, lines)


# ---------------------------------------------------------------------------
# 3. Truncated covariance identity
# ---------------------------------------------------------------------------


def _criterion_3(seed: int, level: str) -> CriterionResult:
    m, theta = 32, 0.5
    samples = _samples(20_000, level)
    key = _key(seed, 3, Lane.HMC)
    cols = truncated_ensemble(theta, m, (8, 16, 32), samples, key)
    by_q = {8: cols[:, 0], 16: cols[:, 1], 32: cols[:, 2]}
    lines, passed = [], True
    for q1, q2 in ((8, 16), (16, 16), (32, 8)):
        prod = by_q[q1] * np.conj(by_q[q2])
        target = truncated_covariance(m, 0, q1, q2, theta)
        re = mean_estimate(prod.real)
        im = mean_estimate(prod.imag)
        ok = re.within(target) and im.within(0.0)
        passed &= ok
        lines.append(
            f"(q1,q2)=({q1},{q2}): Re {re.value:.5f} +- {re.se:.5f} vs exact {target:.5f}, "
            f"Im {im.value:.5f} +- {im.se:.5f} {'ok' if ok else 'OUT OF RANGE'}"
        )
    return CriterionResult(3, "truncated covariance identity", passed, lines)


# ---------------------------------------------------------------------------
# 4. C_delta closed form vs quadrature
# ---------------------------------------------------------------------------


def _criterion_4(seed: int, level: str) -> CriterionResult:
    lines, passed = [], True
    for theta in (0.3, 0.6, 0.9):
        table = p_theta_density(theta, y_max=12.0)
        for delta in (0.1, 0.2, 0.5):
            ci = c_delta_integral(theta, delta, table)
            cc = c_delta_closed(theta, delta, table)
            ok = abs(ci - cc) <= 1e-6
            passed &= ok
            lines.append(
                f"theta={theta} delta={delta}: integral {ci:.8f} closed {cc:.8f} "
                f"|diff| {abs(ci - cc):.2e} {'ok' if ok else 'OUT OF TOL'}"
            )
    table1 = p_theta_density(1.0, y_max=4.0)
    val = c_delta_closed(1.0, 0.5, table1)
    ok = abs(val - np.log(2.0)) <= 1e-6
    passed &= ok
    lines.append(f"theta=1 delta=0.5: C_delta {val:.8f} vs log 2 {np.log(2.0):.8f} {'ok' if ok else 'OUT OF TOL'}")
    return CriterionResult(4, "C_delta identity", passed, lines)


# ---------------------------------------------------------------------------
# 5. Dickman-density validation triangle
# ---------------------------------------------------------------------------


def _table_laplace(table, m: float) -> float:
    """int_0^inf e^{-m y} p_theta(y) dy from the table (exact head on (0,1])."""
    theta = table.theta
    amp = np.exp(-EULER_GAMMA * theta) / gamma_fn(theta)
    # substitution u = y^theta removes the endpoint singularity of y^(theta-1)
    head = quad(lambda u: np.exp(-m * u ** (1.0 / theta)), 0.0, 1.0, limit=200)[0] * amp / theta
    n1 = int(round(1.0 / table.step))
    ys = table.grid[n1:]
    return float(head + np.trapezoid(np.exp(-m * ys) * table.density[n1:], ys))


def _criterion_5(seed: int, level: str) -> CriterionResult:
    samples = _samples(10_000, level)
    lines, passed = [], True
    edges = np.arange(0.0, 3.0001, 0.25)
    for j, theta in enumerate((0.3, 0.6, 0.9)):
        table = p_theta_density(theta, y_max=16.0)
        for m in (0.5, 1.0, 2.0):
            lhs = _table_laplace(table, m)
            rhs = t0n_laplace_limit(theta, m)
            ok = abs(lhs - rhs) <= 1e-4
            passed &= ok
            lines.append(
                f"theta={theta} m={m}: table Laplace {lhs:.6f} vs product limit {rhs:.6f} "
                f"|diff| {abs(lhs - rhs):.2e} {'ok' if ok else 'OUT OF TOL'}"
            )
        key = _key(seed, 5, Lane.EWENS, offset=j * samples)
        t = t0n_samples(5000, theta, samples, key)
        probs = np.append(np.diff(table.cdf(edges)), 1.0 - table.cdf(edges[-1]))
        counts = np.append(np.histogram(t, bins=edges)[0], np.sum(t >= edges[-1]))
        verdict = chi_square_gof(counts, probs)
        passed &= verdict.passed
        lines.append(
            f"theta={theta}: T_0n/n histogram chi2={verdict.statistic:.2f} p={verdict.p_value:.4f} "
            f"({samples} samples, n=5000) {'ok' if verdict.passed else 'REJECTED'}"
        )
        f1 = float(np.exp(EULER_GAMMA * theta) * gamma_fn(theta) * table.density_at(1.0)[0])
        ok = abs(f1 - 1.0) <= 1e-8
        passed &= ok
        lines.append(f"theta={theta}: F(1) = {f1:.10f} {'ok' if ok else 'OUT OF TOL'}")
    return CriterionResult(5, "Dickman density validation triangle", passed, lines)


# ---------------------------------------------------------------------------
# 6. Tauberian constant
# ---------------------------------------------------------------------------


def _criterion_6(seed: int, level: str) -> CriterionResult:
    lines, passed = [], True
    for theta in (0.3, 0.6):
        table = p_theta_density(theta, y_max=12.0)
        cd = c_delta_integral(theta, 0.1, table)
        gaps = [abs(a_constant(theta, 0.1, eps, table) - cd) for eps in (0.1, 0.05, 0.025)]
        ok = gaps[0] > gaps[1] > gaps[2]
        passed &= ok
        lines.append(
            f"theta={theta} delta=0.1: |A - C_delta| over eps (0.1, 0.05, 0.025) = "
            f"({gaps[0]:.5f}, {gaps[1]:.5f}, {gaps[2]:.5f}) {'decreasing' if ok else 'NOT DECREASING'}"
        )
    table = p_theta_density(0.5, y_max=52.0)
    a_val = a_constant(0.5, 0.02, 0.01, table)
    ok = 0.9 <= a_val <= 1.0
    passed &= ok
    lines.append(f"A(0.5, 0.02, 0.01) = {a_val:.6f}, required in [0.9, 1.0] {'ok' if ok else 'OUT OF RANGE'}")
    return CriterionResult(6, "Tauberian constant", passed, lines)


# ---------------------------------------------------------------------------
# 7. Bracket first moment
# ---------------------------------------------------------------------------


def _exact_bracket_mean(theta: float, n: int, delta: float, epsilon: float,
                        p: TestPolynomial) -> float:
    """E of the normalized bracket at finite n, from the covariance identity."""
    schedule = block_schedule(n, delta, epsilon)
    total = 0.0
    for n_k, q_lo, q_hi in schedule.blocks():
        for q in range(q_lo, q_hi + 1):
            for s in range(p.degree + 1):
                w = abs(p.coeffs[s]) ** 2
                if w:
                    total += (theta / n_k) * w * truncated_covariance(n - q + s, 0, n_k, n_k, theta)
    return total / second_moment(n, theta)


def _criterion_7(seed: int, level: str) -> CriterionResult:
    theta, delta, epsilon, n = 0.5, 0.1, 0.1, 1024
    samples = _samples(2_000, level)
    p = TestPolynomial(1, np.array([1.0, 1.0]))
    key = _key(seed, 7, Lane.HMC)
    out = block_martingale_ensemble(theta, n, delta, epsilon, p, samples, key)
    est = mean_estimate(out["bracket"])
    table = p_theta_density(theta, y_max=12.0)
    target = a_constant(theta, delta, epsilon, table) * p.coeff_norm_sq()
    exact = _exact_bracket_mean(theta, n, delta, epsilon, p)
    ok = est.within(target, allowance=0.1 * target)
    lines = [
        f"E bracket = {est.value:.5f} +- {est.se:.5f} ({samples} samples, n={n})",
        f"limit A*|p|^2 = {target:.5f}; exact finite-n mean = {exact:.5f}; "
        f"tolerance 4 se + 10% {'ok' if ok else 'OUT OF RANGE'}",
    ]
    return CriterionResult(7, "bracket first moment", ok, lines)


# ---------------------------------------------------------------------------
# 8. Limit theorem for c_n (scalar law)
# ---------------------------------------------------------------------------


def _criterion_8(seed: int, level: str) -> CriterionResult:
    n, k, J = 1024, 512, 4096
    samples = _samples(5_000, level)
    lines, passed = [], True
    for j, theta in enumerate((0.4, 0.7)):
        key_h = _key(seed, 8, Lane.HMC, offset=j * samples)
        key_g = _key(seed, 8, Lane.GMC, offset=j * samples)
        c = coefficient_ensemble(theta, n, samples, key_h)[:, 0]
        hmc_side = c.real / np.sqrt(second_moment(n, theta))
        gmc_side = limit_law_ensemble(theta, 0, k, J, samples, key_g)[:, 0].real
        verdict = ks_two_sample(hmc_side, gmc_side)
        passed &= verdict.passed
        lines.append(
            f"theta={theta}: KS(Re c_{n}/sqrt(E|c|^2), Re sqrt(mass)*Z) = {verdict.statistic:.4f} "
            f"p={verdict.p_value:.4f} ({samples} vs {samples}) {'ok' if verdict.passed else 'REJECTED'}"
        )
    return CriterionResult(8, "scalar limit law (KS)", passed, lines)


# ---------------------------------------------------------------------------
# 9. Fourth-moment corroboration below theta = 1/2
# ---------------------------------------------------------------------------


def _jackknife_se_mean(x: np.ndarray) -> float:
    n = x.size
    loo = (x.sum() - x) / (n - 1)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def _criterion_9(seed: int, level: str) -> CriterionResult:
    theta = 0.3
    ns = (128, 512, 2048)
    samples = _samples(50_000, level)
    key = _key(seed, 9, Lane.HMC)
    cols = coefficient_ensemble(theta, ns[-1], samples, key, keep=list(ns))
    limit = limit_abs_moment(2, theta)
    lines, gaps = [], []
    for j, n in enumerate(ns):
        vals = (np.abs(cols[:, j]) ** 2 / second_moment(n, theta)) ** 2
        mean = float(np.mean(vals))
        se = _jackknife_se_mean(vals)
        gap = abs(mean - limit) / limit
        gaps.append(gap)
        lines.append(
            f"n={n}: E|c_n|^4/(E|c_n|^2)^2 = {mean:.4f} (jackknife se {se:.4f}), "
            f"limit {limit:.4f}, rel gap {gap:.3%}"
        )
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[2] <= 0.10
    lines.append(
        f"gaps {'decrease' if gaps[0] > gaps[1] > gaps[2] else 'DO NOT DECREASE'}; "
        f"final gap {gaps[2]:.3%} (required <= 10%); common draws across n ({samples} samples)"
    )
    return CriterionResult(9, "fourth-moment corroboration", ok, lines)


# ---------------------------------------------------------------------------
# 10. Joint law of shifted coefficients
# ---------------------------------------------------------------------------


def _criterion_10(seed: int, level: str) -> CriterionResult:
    theta, n, ell, k, J = 0.5, 1024, 2, 512, 4096
    samples = _samples(5_000, level)
    key_h = _key(seed, 10, Lane.HMC)
    key_g = _key(seed, 10, Lane.GMC)
    cols = coefficient_ensemble(theta, n + ell, samples, key_h, keep=[n, n + 1, n + 2])
    v = cols / np.sqrt(second_moment(n, theta))
    lines, passed = [], True
    for i in range(ell + 1):
        for j in range(i, ell + 1):
            prod = v[:, i] * np.conj(v[:, j])
            target = 1.0 if i == j else 0.0
            re = mean_estimate(prod.real)
            im = mean_estimate(prod.imag)
            ok = re.within(target) and im.within(0.0)
            passed &= ok
            lines.append(
                f"cov[{i},{j}] = {re.value:+.4f}{im.value:+.4f}i "
                f"(se {re.se:.4f}/{im.se:.4f}) vs {target:.0f} {'ok' if ok else 'OUT OF RANGE'}"
            )
    w = limit_law_ensemble(theta, ell, k, J, samples, key_g)
    verdict = ks_two_sample((v[:, 0] + v[:, 1]).real, (w[:, 0] + w[:, 1]).real)
    passed &= verdict.passed
    lines.append(
        f"KS(Re(c_n + c_n+1), Re combination of sqrt(H)Z) = {verdict.statistic:.4f} "
        f"p={verdict.p_value:.4f} {'ok' if verdict.passed else 'REJECTED'}"
    )
    return CriterionResult(10, "shifted-coefficient joint law", passed, lines)


# ---------------------------------------------------------------------------
# 11. Circular beta-ensemble reductions
# ---------------------------------------------------------------------------


def _criterion_11(seed: int, level: str) -> CriterionResult:
    samples = _samples(20_000, level)
    lines, passed = [], True
    ens = cbe_secular_ensemble(64, 2.0, 8, samples, _key(seed, 11, Lane.CBE))
    worst_dev, worst_n = 0.0, 0
    for n in range(1, 9):
        est = mean_estimate(np.abs(ens[:, n]) ** 2)
        dev = abs(est.value - 1.0) / (4.0 * est.se)
        if dev > worst_dev:
            worst_dev, worst_n = dev, n
        passed &= est.within(1.0)
    lines.append(
        f"beta=2, N=64: E|c_n|^2 = 1 within 4 se for n=1..8 "
        f"(worst at n={worst_n}: {worst_dev:.2f} of allowance) {'ok' if passed else 'OUT OF RANGE'}"
    )
    ens4 = cbe_secular_ensemble(256, 4.0, 8, samples, _key(seed, 11, Lane.CBE, offset=samples))
    target = second_moment(8, 0.5)
    est = mean_estimate(np.abs(ens4[:, 8]) ** 2)
    ok = est.within(target, allowance=0.1 * target)
    passed &= ok
    lines.append(
        f"beta=4, N=256: E|c_8|^2 = {est.value:.5f} +- {est.se:.5f} vs {target:.5f} "
        f"(4 se + 10% n/N allowance) {'ok' if ok else 'OUT OF RANGE'}"
    )
    verb = cbe_secular_ensemble(3, 4.0, 3, samples, _key(seed, 11, Lane.CBE, offset=2 * samples))
    angles = cbe_rejection_ensemble(3, 4.0, samples, _key(seed, 11, Lane.CBE, offset=3 * samples))
    rej = secular_from_angles(angles)
    for name, a, b in (
        ("Re c_1", verb[:, 1].real, rej[:, 1].real),
        ("Im c_1", verb[:, 1].imag, rej[:, 1].imag),
        ("|c_2|", np.abs(verb[:, 2]), np.abs(rej[:, 2])),
    ):
        verdict = ks_two_sample(a, b)
        passed &= verdict.passed
        lines.append(
            f"N=3 beta=4 cross-method KS on {name}: D={verdict.statistic:.4f} "
            f"p={verdict.p_value:.4f} {'ok' if verdict.passed else 'REJECTED'}"
        )
    return CriterionResult(11, "circular beta-ensemble reduction", passed, lines)


# ---------------------------------------------------------------------------
# 12. Ewens suite
# ---------------------------------------------------------------------------


def _partitions(n: int):
    from .series import _compositions

    return _compositions(n)


def _criterion_12(seed: int, level: str) -> CriterionResult:
    lines, passed = [], True
    worst = 0.0
    for n in range(1, 9):
        for theta in (0.3, 0.7, 1.0):
            total = 0.0
            for comp in _partitions(n):
                counts = np.zeros(n, dtype=np.int64)
                for kk, mk in comp.items():
                    counts[kk - 1] = mk
                total += ewens_pmf(CycleCounts(n=n, counts=counts), theta)
            worst = max(worst, abs(total - 1.0))
    ok = worst <= 1e-12
    passed &= ok
    lines.append(f"pmf sums to 1 over partitions, n<=8: worst |sum-1| = {worst:.2e} {'ok' if ok else 'OUT OF TOL'}")

    n, theta = 5, 0.5
    chi_samples = _samples(100_000, level)
    counts_matrix = ewens_sample_matrix(n, theta, chi_samples, _key(seed, 12, Lane.EWENS))
    parts = [tuple(np.trim_zeros(np.array([c.get(k, 0) for k in range(1, n + 1)]), "b")) for c in _partitions(n)]
    index = {p: i for i, p in enumerate(parts)}
    observed = np.zeros(len(parts))
    for row in counts_matrix:
        observed[index[tuple(np.trim_zeros(row, "b"))]] += 1
    probs = np.zeros(len(parts))
    for c in _partitions(n):
        counts = np.zeros(n, dtype=np.int64)
        for kk, mk in c.items():
            counts[kk - 1] = mk
        probs[index[tuple(np.trim_zeros(counts, "b"))]] = ewens_pmf(CycleCounts(n=n, counts=counts), theta)
    verdict = chi_square_gof(observed, probs)
    passed &= verdict.passed
    lines.append(
        f"sampler vs pmf at n=5, theta=0.5: chi2={verdict.statistic:.2f} p={verdict.p_value:.4f} "
        f"({chi_samples} samples) {'ok' if verdict.passed else 'REJECTED'}"
    )

    n_big, theta = 2000, 0.5
    ecdf_samples = _samples(10_000, level)
    ls = np.sort(longest_cycle_samples(n_big, theta, ecdf_samples, _key(seed, 12, Lane.EWENS, offset=chi_samples)) / n_big)
    table = p_theta_density(theta, y_max=16.0)
    from .ewens import kingman_cdf

    grid = np.linspace(0.02, 1.0, 50)
    ecdf = np.searchsorted(ls, grid, side="right") / ecdf_samples
    sup = float(np.max(np.abs(ecdf - np.array([kingman_cdf(theta, x, table) for x in grid]))))
    ok = sup <= 0.02
    passed &= ok
    lines.append(
        f"ECDF of L/n at n={n_big} vs Kingman F: sup distance {sup:.4f} over 50 grid points "
        f"({ecdf_samples} samples, tol 0.02) {'ok' if ok else 'OUT OF TOL'}"
    )
    return CriterionResult(12, "Ewens suite", passed, lines)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

CRITERIA = {
    1: _criterion_1,
    2: _criterion_2,
    3: _criterion_3,
    4: _criterion_4,
    5: _criterion_5,
    6: _criterion_6,
    7: _criterion_7,
    8: _criterion_8,
    9: _criterion_9,
    10: _criterion_10,
    11: _criterion_11,
    12: _criterion_12,
}

SUITES = {
    "identities": (1, 4, 6),
    "limits": (2, 3, 5, 7, 8, 9, 10, 12),
    "cbe": (11,),
    "all": tuple(range(1, 13)),
}


def run_criterion(index: int, seed: int = DEFAULT_SEED, level: str = "full") -> CriterionResult:
    if index not in CRITERIA:
        raise ValueError(f"unknown criterion {index}")
    return CRITERIA[index](seed, level)


def run_suite(name: str, seed: int = DEFAULT_SEED, level: str = "full", echo=None) -> list:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = []
    for idx in SUITES[name]:
        result = run_criterion(idx, seed=seed, level=level)
        results.append(result)
        if echo is not None:
            echo(result.summary())
            for line in result.lines:
                echo(f"    {line}")
    return results
