import numpy as np
import pytest
from scipy.special import gamma

from hmclab.moments import (
    MomentBlowupError,
    gmc_mass_moment,
    limit_abs_moment,
    second_moment,
    truncated_covariance,
)


class TestSecondMoment:
    def test_theta_one_is_flat(self):
        for n in (0, 1, 5, 100, 10_000):
            assert second_moment(n, 1.0) == pytest.approx(1.0, rel=1e-13)

    def test_n_one_is_theta(self):
        for theta in (0.1, 0.5, 0.9):
            assert second_moment(1, theta) == pytest.approx(theta, rel=1e-13)

    def test_hand_value(self):
        # Gamma(2.5) / (Gamma(0.5) * 2!) = 3/8, also theta/2 + theta^2/2 at theta = 1/2
        assert second_moment(2, 0.5) == pytest.approx(0.375, rel=1e-13)

    def test_recurrence(self):
        # E|c_n|^2 = E|c_{n-1}|^2 * (n - 1 + theta) / n
        for theta in (0.25, 0.6, 0.95):
            for n in (1, 2, 17, 301, 4096):
                lhs = second_moment(n, theta)
                rhs = second_moment(n - 1, theta) * (n - 1 + theta) / n
                assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_vectorized(self):
        ns = np.arange(0, 50)
        vals = second_moment(ns, 0.4)
        assert vals.shape == ns.shape
        assert vals[3] == pytest.approx(second_moment(3, 0.4), rel=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError):
            second_moment(4, 0.0)
        with pytest.raises(ValueError):
            second_moment(4, 1.5)
        with pytest.raises(ValueError):
            second_moment(-1, 0.5)


class TestTruncatedCovariance:
    def test_full_truncation_is_second_moment(self):
        assert truncated_covariance(10, 2, 8, 9, 0.5) == pytest.approx(second_moment(8, 0.5), rel=1e-12)

    def test_zero_truncation(self):
        assert truncated_covariance(10, 2, 0, 5, 0.5) == 0.0
        assert truncated_covariance(10, 2, 5, 0, 0.5) == 0.0

    def test_hand_value(self):
        # second_moment(2, 0.5) * theta/(theta+1) = 0.375 / 3
        assert truncated_covariance(2, 0, 1, 5, 0.5) == pytest.approx(0.125, rel=1e-12)

    def test_monotone_in_truncation(self):
        vals = [truncated_covariance(24, 4, q, q, 0.7) for q in range(0, 21)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            truncated_covariance(4, 5, 1, 1, 0.5)
        with pytest.raises(ValueError):
            truncated_covariance(4, 1, -1, 1, 0.5)


class TestMassMoments:
    def test_first_moment_is_one(self):
        for theta in (0.1, 0.5, 0.9):
            assert gmc_mass_moment(1.0, theta) == pytest.approx(1.0, rel=1e-13)

    def test_quarter_second_moment(self):
        # Gamma(1/2) / Gamma(3/4)^2
        expected = gamma(0.5) / gamma(0.75) ** 2
        assert gmc_mass_moment(2.0, 0.25) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(1.1803, abs=5e-5)

    def test_blowup(self):
        with pytest.raises(MomentBlowupError):
            gmc_mass_moment(2.0, 0.5)
        with pytest.raises(MomentBlowupError):
            gmc_mass_moment(4.0, 0.3)

    def test_log_convex_in_order(self):
        theta = 0.2
        for p in (0.5, 1.0, 1.5, 2.0):
            lhs = gmc_mass_moment(p, theta) * gmc_mass_moment(p + 1.0, theta)
            mid = gmc_mass_moment(p + 0.5, theta)
            assert lhs >= mid**2 * (1 - 1e-12)


class TestLimitAbsMoment:
    def test_first(self):
        for theta in (0.2, 0.6, 0.9):
            assert limit_abs_moment(1, theta) == pytest.approx(1.0, rel=1e-13)

    def test_second_at_point_three(self):
        expected = 2.0 * gamma(0.4) / gamma(0.7) ** 2
        assert limit_abs_moment(2, 0.3) == pytest.approx(expected, rel=1e-12)

    def test_boundary_error(self):
        with pytest.raises(MomentBlowupError):
            limit_abs_moment(2, 0.5)

    def test_order_validated(self):
        with pytest.raises(ValueError):
            limit_abs_moment(0, 0.3)
