import math

import numpy as np
import pytest

from hmclab.moments import second_moment, truncated_covariance
from hmclab.rng import GaussianDraw, Lane, StreamKey, complex_normal_stream
from hmclab.series import (
    ONE,
    TestPolynomial,
    _block_coefficients,
    block_martingale_ensemble,
    block_schedule,
    bracket_process,
    coefficient_ensemble,
    hmc_coefficients,
    hmc_coefficients_bruteforce,
    martingale_approx_block,
    martingale_approx_delta,
    mass_statistic,
    mass_tail_bound,
    recurrence_batch,
    truncated_coefficients,
    truncated_ensemble,
    variance_vk,
)

KEY = StreamKey(seed=99, replica=0, lane=Lane.HMC)


def draw(count, replica=0):
    return complex_normal_stream(KEY.with_replica(replica), count)


class TestCoefficients:
    def test_constant_term(self):
        series = hmc_coefficients(draw(4), 0.5, 0)
        assert series.values[0] == 1.0

    def test_first_coefficient(self):
        d = draw(4)
        series = hmc_coefficients(d, 0.7, 1)
        assert series[1] == pytest.approx(np.sqrt(0.7) * d[0], rel=1e-14)

    def test_hand_value_n2(self):
        # theta = 1/2, N_1 = N_2 = 1: c_2 = sqrt(theta/2) + theta/2 = 3/4
        series = hmc_coefficients(np.array([1.0 + 0j, 1.0 + 0j]), 0.5, 2)
        assert series[2] == pytest.approx(0.75, rel=1e-14)

    def test_degenerate_theta_zero(self):
        series = hmc_coefficients(draw(8), 0.0, 8)
        assert series[0] == 1.0
        assert np.all(series.values[1:] == 0.0)

    def test_draw_too_short(self):
        with pytest.raises(ValueError):
            hmc_coefficients(draw(3), 0.5, 4)

    def test_oracle_agreement(self):
        for theta in (0.25, 0.5, 0.9):
            for r in range(20):
                d = draw(12, replica=r)
                a = hmc_coefficients(d, theta, 12).values
                b = hmc_coefficients_bruteforce(d, theta, 12).values
                assert np.max(np.abs(a - b) / (1.0 + np.abs(b))) <= 1e-10

    def test_bruteforce_size_cap(self):
        with pytest.raises(ValueError):
            hmc_coefficients_bruteforce(draw(30), 0.5, 21)

    def test_sqrt_theta_polynomial_structure(self):
        # c_n is a polynomial of degree n in sqrt(theta); the degree-n
        # coefficient is N_1^n / n! (the all-ones composition).
        d = draw(4, replica=3)
        for n in (2, 3, 4):
            xs = np.linspace(0.2, 1.0, n + 1)  # sqrt(theta) sample points
            ys = [hmc_coefficients_bruteforce(d, x**2, n)[n] for x in xs]
            coeffs = np.polynomial.polynomial.polyfit(xs, ys, n)
            assert coeffs[n] == pytest.approx(d[0] ** n / math.factorial(n), rel=1e-8)


class TestTruncated:
    def test_zero_truncation(self):
        series = truncated_coefficients(draw(8), 0.6, 6, 0)
        assert series[0] == 1.0
        assert np.all(series.values[1:] == 0.0)

    def test_inactive_truncation(self):
        d = draw(8)
        full = hmc_coefficients(d, 0.6, 8).values
        trunc = truncated_coefficients(d, 0.6, 8, 8).values
        assert np.array_equal(full, trunc)

    def test_single_mode(self):
        # n = 3, q = 1: only the composition m_1 = 3 survives
        d = draw(4)
        series = truncated_coefficients(d, 0.5, 3, 1)
        assert series[3] == pytest.approx(0.5**1.5 * d[0] ** 3 / 6.0, rel=1e-13)

    def test_matches_bruteforce_with_zeroed_tail(self):
        d = draw(10)
        masked = d.copy()
        masked[4:] = 0.0
        a = truncated_coefficients(d, 0.8, 10, 4).values
        b = hmc_coefficients_bruteforce(masked, 0.8, 10).values
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_short_draw_is_padded(self):
        # a draw of length q suffices for any n at truncation q
        d = draw(3)
        a = truncated_coefficients(d, 0.5, 9, 3).values
        padded = np.concatenate([d, np.zeros(6, complex)])
        b = hmc_coefficients(padded, 0.5, 9).values
        assert np.max(np.abs(a - b)) <= 1e-14

    def test_ensemble_matches_scalar(self):
        cols = truncated_ensemble(0.5, 12, (3, 7, 12), 4, KEY)
        for r in range(4):
            d = complex_normal_stream(KEY.with_replica(r), 12)
            for j, q in enumerate((3, 7, 12)):
                expected = truncated_coefficients(d, 0.5, 12, q)[12]
                assert cols[r, j] == pytest.approx(expected, rel=1e-12)


class TestEnsemble:
    def test_chunk_and_thread_invariance(self):
        a = coefficient_ensemble(0.5, 24, 37, KEY, keep=[24], chunk=37)
        b = coefficient_ensemble(0.5, 24, 37, KEY, keep=[24], chunk=5)
        c = coefficient_ensemble(0.5, 24, 37, KEY, keep=[24], chunk=5, threads=3)
        assert np.array_equal(a, b)
        assert np.array_equal(b, c)

    def test_matches_scalar_path(self):
        mat = coefficient_ensemble(0.7, 16, 3, KEY, keep=[8, 16])
        for r in range(3):
            series = hmc_coefficients(complex_normal_stream(KEY.with_replica(r), 16), 0.7, 16)
            assert mat[r, 0] == pytest.approx(series[8], rel=1e-12)
            assert mat[r, 1] == pytest.approx(series[16], rel=1e-12)

    def test_engines_agree(self):
        pytest.importorskip("numba")
        rng = np.random.default_rng(5)
        w = (rng.standard_normal((40, 64)) + 1j * rng.standard_normal((40, 64))) / np.sqrt(2)
        a = recurrence_batch(w, 64, engine="numpy")
        b = recurrence_batch(w, 64, engine="numba")
        assert np.max(np.abs(a - b) / (1.0 + np.abs(a))) <= 1e-10

    def test_normalized_second_moment(self):
        n, samples, theta = 64, 4000, 0.6
        c = coefficient_ensemble(theta, n, samples, KEY)[:, 0]
        vals = np.abs(c) ** 2 / second_moment(n, theta)
        se = np.std(vals, ddof=1) / np.sqrt(samples)
        assert abs(np.mean(vals) - 1.0) <= 4.0 * se


class TestBlockSchedule:
    def test_spec_arithmetic(self):
        s = block_schedule(100, 0.1, 0.2)
        assert list(s.boundaries) == [10, 30, 50, 70, 90, 100]
        assert s.K == 5

    def test_single_block_when_first_step_reaches_n(self):
        s = block_schedule(10, 0.5, 0.5)
        assert list(s.boundaries) == [5, 10]
        assert s.K == 1

    def test_large_delta_plus_epsilon(self):
        s = block_schedule(100, 0.6, 0.7)
        assert list(s.boundaries) == [60, 100]
        assert s.K == 1

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            block_schedule(5, 0.1, 0.2)  # floor(delta n) = 0
        with pytest.raises(ValueError):
            block_schedule(100, 0.1, 0.005)  # floor(epsilon n) = 0
        with pytest.raises(ValueError):
            block_schedule(100, 1.2, 0.2)

    def test_strictly_increasing_to_n(self):
        s = block_schedule(173, 0.13, 0.21)
        b = s.boundaries
        assert b[-1] == 173
        assert np.all(np.diff(b) > 0)
        assert s.K == len(b) - 1


def exact_delta_l2(theta, n, delta):
    """E|c_n - approx|^2 via orthogonal increments and the covariance identity."""
    q0 = max(1, math.floor(delta * n))
    captured = sum(
        theta / q * truncated_covariance(n - q, 0, q - 1, q - 1, theta) for q in range(q0, n + 1)
    )
    return second_moment(n, theta) - captured


class TestMartingaleDelta:
    def test_n_one_exact(self):
        d = draw(1)
        val = martingale_approx_delta(d, 0.5, 1, 0.5)
        assert val == pytest.approx(np.sqrt(0.5) * d[0], rel=1e-14)

    def test_last_increment_linearity(self):
        d = draw(12)
        doubled = d.copy()
        doubled[-1] *= 2.0
        base = martingale_approx_delta(d, 0.5, 12, 0.25)
        bumped = martingale_approx_delta(doubled, 0.5, 12, 0.25)
        extra = d[-1] * math.sqrt(0.5 / 12)  # c_{0,11} = 1
        assert bumped - base == pytest.approx(extra, rel=1e-12)

    def test_l2_distance_matches_exact_and_is_small(self):
        theta, n, samples = 0.5, 48, 3000
        delta = 1.0 / n  # floor(delta n) = 1, all increments kept
        diffs = np.empty(samples)
        for r in range(samples):
            d = complex_normal_stream(KEY.with_replica(r), n)
            c_n = hmc_coefficients(d, theta, n)[n]
            approx = martingale_approx_delta(d, theta, n, delta)
            diffs[r] = abs(c_n - approx) ** 2
        exact = exact_delta_l2(theta, n, delta)
        se = np.std(diffs, ddof=1) / np.sqrt(samples)
        assert abs(np.mean(diffs) - exact) <= 4.0 * se
        assert exact / second_moment(n, theta) < 0.2


class TestMartingaleBlock:
    def test_trivial_polynomial_reduces(self):
        d = draw(16)
        a = martingale_approx_block(d, 0.5, 12, 0.25, 0.3)
        b = martingale_approx_block(d, 0.5, 12, 0.25, 0.3, ONE)
        assert a == b

    def test_hand_value_n2(self):
        d = draw(4)
        val = martingale_approx_block(d, 0.5, 2, 0.5, 0.6)
        assert val == pytest.approx(np.sqrt(0.5) * d[1], rel=1e-14)

    def test_second_moment_closed_form(self):
        theta, n, delta, epsilon = 0.5, 64, 0.2, 0.2
        p = TestPolynomial(1, np.array([1.0, 0.5j]))
        out = block_martingale_ensemble(theta, n, delta, epsilon, p, 4000, KEY)
        vals = np.abs(out["approx"]) ** 2
        exact = 0.0
        for n_k, q_lo, q_hi in block_schedule(n, delta, epsilon).blocks():
            for q in range(q_lo, q_hi + 1):
                for s in range(p.degree + 1):
                    exact += (
                        theta / n_k * abs(p.coeffs[s]) ** 2
                        * truncated_covariance(n - q + s, 0, n_k, n_k, theta)
                    )
        se = np.std(vals, ddof=1) / np.sqrt(len(vals))
        assert abs(np.mean(vals) - exact) <= 4.0 * se

    def test_increment_orthogonality(self):
        theta, n, delta, epsilon, samples = 0.5, 24, 0.25, 0.25, 4000
        schedule = block_schedule(n, delta, epsilon)
        pairs = ((7, 8), (8, 14))  # same block and different blocks
        prods = {pair: np.empty(samples, dtype=np.complex128) for pair in pairs}
        for r in range(samples):
            d = complex_normal_stream(KEY.with_replica(r), n)
            qs, a = _block_coefficients(d, theta, n, schedule, ONE)
            inc = d[qs - 1] * a
            by_q = dict(zip(qs.tolist(), inc))
            for q1, q2 in pairs:
                prods[(q1, q2)][r] = by_q[q1] * np.conj(by_q[q2])
        for pair, vals in prods.items():
            for part in (vals.real, vals.imag):
                se = np.std(part, ddof=1) / np.sqrt(samples)
                assert abs(np.mean(part)) <= 4.0 * se, pair

    def test_ensemble_matches_scalar(self):
        theta, n, delta, epsilon = 0.6, 20, 0.2, 0.3
        p = TestPolynomial(1, np.array([1.0, 1.0]))
        out = block_martingale_ensemble(theta, n, delta, epsilon, p, 3, KEY)
        for r in range(3):
            d = complex_normal_stream(KEY.with_replica(r), n + 1)
            assert out["approx"][r] == pytest.approx(
                martingale_approx_block(d, theta, n, delta, epsilon, p), rel=1e-12
            )
            assert out["bracket"][r] == pytest.approx(
                bracket_process(d, theta, n, delta, epsilon, p), rel=1e-12
            )
            series = hmc_coefficients(d, theta, n + 1)
            assert out["direct"][r] == pytest.approx(series[n] + series[n + 1], rel=1e-12)

    def test_block_l2_decreases_with_scales(self):
        # paired Monte Carlo: same draws across the three (delta, epsilon)
        # configurations; exact values via the covariance identity confirm
        # the ordering deterministically.
        theta, n, samples = 0.5, 512, 500
        configs = ((0.2, 0.2), (0.1, 0.1), (0.05, 0.05))
        sm = second_moment(n, theta)
        diffs = np.empty((samples, len(configs)))
        for j, (delta, epsilon) in enumerate(configs):
            out = block_martingale_ensemble(theta, n, delta, epsilon, ONE, samples, KEY)
            diffs[:, j] = np.abs(out["direct"] - out["approx"]) ** 2 / sm
        exact = [exact_block_l2(theta, n, d, e) / sm for d, e in configs]
        assert exact[0] > exact[1] > exact[2]
        for j in range(len(configs) - 1):
            gap = diffs[:, j] - diffs[:, j + 1]
            se = np.std(gap, ddof=1) / np.sqrt(samples)
            assert np.mean(gap) >= -4.0 * se


def exact_block_l2(theta, n, delta, epsilon):
    """E|c_n - block approx|^2 from the covariance identity."""
    sm = second_moment(n, theta)
    e_sq = 0.0
    cross = 0.0
    for n_k, q_lo, q_hi in block_schedule(n, delta, epsilon).blocks():
        for q in range(q_lo, q_hi + 1):
            e_sq += theta / n_k * truncated_covariance(n - q, 0, n_k, n_k, theta)
            cross += theta / math.sqrt(q * n_k) * truncated_covariance(n - q, 0, q - 1, n_k, theta)
    return sm + e_sq - 2.0 * cross


class TestBracket:
    def test_nonnegative_and_zero_polynomial(self):
        d = draw(16)
        assert bracket_process(d, 0.5, 12, 0.25, 0.3) >= 0.0
        zero = TestPolynomial(0, np.array([0.0]))
        assert bracket_process(d, 0.5, 12, 0.25, 0.3, zero) == 0.0


class TestMassStatistic:
    def test_empty_field(self):
        assert mass_statistic(np.empty(0, complex), 0.5, 0, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_mean_one(self):
        theta, k, r, samples = 0.5, 16, 0.8, 800
        vals = np.array([
            mass_statistic(complex_normal_stream(KEY.with_replica(j), k), theta, k, r)
            for j in range(samples)
        ])
        se = np.std(vals, ddof=1) / np.sqrt(samples)
        assert abs(np.mean(vals) - 1.0) <= 4.0 * se

    def test_insufficient_tail_rejected(self):
        with pytest.raises(ValueError):
            mass_statistic(draw(8), 0.5, 8, 0.9, tail_n=5)

    def test_tail_bound_decreases(self):
        b1 = mass_tail_bound(0.5, 0.9, 50, ONE)
        b2 = mass_tail_bound(0.5, 0.9, 200, ONE)
        assert b2 < b1

    def test_r_domain(self):
        with pytest.raises(ValueError):
            mass_statistic(draw(8), 0.5, 8, 1.0)


class TestVarianceVk:
    def test_zero_modes(self):
        assert variance_vk(0, 0.7) == 0.0

    def test_harmonic_value(self):
        assert variance_vk(4, 1.0) == pytest.approx(25.0 / 6.0, rel=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError):
            variance_vk(4, 1.2)
        with pytest.raises(ValueError):
            variance_vk(-1, 0.5)
