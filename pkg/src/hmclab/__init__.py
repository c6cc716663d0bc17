"""Simulation and verification lab for secular coefficients of the
holomorphic multiplicative chaos and the circular beta-ensemble."""

from .rng import (
    GaussianDraw,
    Lane,
    StreamKey,
    beta_variate,
    complex_normal_stream,
    generator,
)
from .series import (
    ONE,
    BlockSchedule,
    CoefficientSeries,
    TestPolynomial,
    block_martingale_ensemble,
    block_schedule,
    bracket_process,
    coefficient_ensemble,
    hmc_coefficients,
    hmc_coefficients_bruteforce,
    martingale_approx_block,
    martingale_approx_delta,
    mass_statistic,
    truncated_coefficients,
    truncated_ensemble,
    variance_vk,
)
from .ewens import (
    CycleCounts,
    DickmanTable,
    a_constant,
    c_delta_closed,
    c_delta_integral,
    ewens_pmf,
    ewens_sample,
    ewens_sample_matrix,
    kingman_cdf,
    longest_cycle_samples,
    p_theta_density,
    prob_longest_at_most,
    t0n_laplace,
    t0n_laplace_limit,
    t0n_samples,
)
from .moments import (
    MomentBlowupError,
    gmc_mass_moment,
    limit_abs_moment,
    second_moment,
    truncated_covariance,
)
from .cbe import (
    SecularCoefficients,
    VerblunskyCoeffs,
    cbe_rejection_ensemble,
    cbe_rejection_sample_smallN,
    cbe_secular_ensemble,
    sample_verblunsky,
    secular_from_angles,
    secular_from_verblunsky,
)
from .gmc import (
    FieldGrid,
    ToeplitzMass,
    field_on_grid,
    gmc_mass_grid,
    limit_law_ensemble,
    limit_law_sample,
    mass_samples,
    psd_sqrt,
    toeplitz_mass,
)
from .stats import (
    EstimateWithError,
    TestVerdict,
    chi_square_gof,
    empirical_moment,
    jackknife_ratio,
    ks_two_sample,
)

__version__ = "0.1.0"
