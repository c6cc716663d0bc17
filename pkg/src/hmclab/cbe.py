"""Circular beta-ensemble spectra via Verblunsky coefficients.

The sparse CMV representation samples rotationally invariant Verblunsky
coefficients alpha_k with |alpha_k|^2 ~ Beta(1, beta (N-k-1)/2) for
k <= N-2 and a final uniform unimodular alpha_{N-1}; the Szego recursion

    Phi_{k+1}(z) = z Phi_k(z) - conj(alpha_k) Phi*_k(z)
    Phi*_{k+1}(z) = Phi*_k(z) - alpha_k z Phi_k(z)

then yields Phi*_N(z) = prod_j (1 - z e^{-i t_j}), the characteristic
polynomial of the ensemble normalized to 1 at z = 0, whose coefficients are
the secular coefficients.  A direct rejection sampler from the angle density
prod |e^{i t_k} - e^{i t_j}|^beta is provided for small N as a cross-method
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import StreamKey, generator

_REJECTION_MAX_N = 4


@dataclass(frozen=True)
class VerblunskyCoeffs:
    N: int
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.complex128)
        object.__setattr__(self, "alpha", alpha)
        if len(alpha) != self.N:
            raise ValueError(f"expected {self.N} coefficients, got {len(alpha)}")
        mods = np.abs(alpha)
        if self.N > 1 and np.any(mods[:-1] >= 1.0):
            raise ValueError("interior Verblunsky coefficients must have modulus < 1")
        if abs(mods[-1] - 1.0) > 1e-12:
            raise ValueError("final Verblunsky coefficient must be unimodular")


@dataclass(frozen=True)
class SecularCoefficients:
    N: int
    values: np.ndarray


def sample_verblunsky(N: int, beta: float, key: StreamKey) -> VerblunskyCoeffs:
    """Verblunsky coefficients whose CMV spectrum is the N-point ensemble at beta."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    rng = generator(key)
    alpha = np.empty(N, dtype=np.complex128)
    if N > 1:
        b = beta * (N - 1.0 - np.arange(N - 1)) / 2.0
        radii_sq = rng.beta(np.ones(N - 1), b)
    phases = rng.uniform(0.0, 2.0 * np.pi, N)
    if N > 1:
        alpha[:-1] = np.sqrt(radii_sq) * np.exp(1j * phases[:-1])
    alpha[-1] = np.exp(1j * phases[-1])
    return VerblunskyCoeffs(N=N, alpha=alpha)


def _szego_batch(alphas: np.ndarray, n_keep: int) -> np.ndarray:
    """First n_keep+1 coefficients of Phi*_N for each row of Verblunsky coefficients.

    The recursion never moves coefficients downward, so truncating both
    polynomials to degree n_keep is exact for the leading coefficients.
    """
    rows, N = alphas.shape
    width = n_keep + 1
    phi = np.zeros((rows, width), dtype=np.complex128)
    phi_star = np.zeros((rows, width), dtype=np.complex128)
    phi[:, 0] = 1.0
    phi_star[:, 0] = 1.0
    shifted = np.empty_like(phi)
    for k in range(N):
        a = alphas[:, k][:, None]
        shifted[:, 0] = 0.0
        shifted[:, 1:] = phi[:, :-1]
        phi = shifted - np.conj(a) * phi_star
        phi_star = phi_star - a * shifted
    return phi_star


def secular_from_verblunsky(v: VerblunskyCoeffs) -> SecularCoefficients:
    """Secular coefficients c_0..c_N of the characteristic polynomial."""
    values = _szego_batch(v.alpha[None, :], v.N)[0]
    if abs(values[0] - 1.0) > 1e-10 or abs(abs(values[-1]) - 1.0) > 1e-10:
        raise RuntimeError("Szego recursion produced an invalid polynomial")
    return SecularCoefficients(N=v.N, values=values)


def cbe_secular_ensemble(N: int, beta: float, n_max: int, samples: int,
                         key: StreamKey, chunk: int = 4096) -> np.ndarray:
    """(samples, n_max+1) matrix of secular coefficients; replica r uses key.replica + r."""
    if not 0 <= n_max <= N:
        raise ValueError(f"need 0 <= n_max <= N, got n_max={n_max}, N={N}")
    out = np.empty((samples, n_max + 1), dtype=np.complex128)
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        alphas = np.empty((rows, N), dtype=np.complex128)
        for r in range(rows):
            alphas[r] = sample_verblunsky(N, beta, key.with_replica(key.replica + lo + r)).alpha
        out[lo : lo + rows] = _szego_batch(alphas, n_max)
    return out


def cbe_rejection_sample_smallN(N: int, beta: float, key: StreamKey) -> np.ndarray:
    """Exact angle sample from the ensemble density by rejection, N <= 4.

    Proposals are uniform angle vectors accepted with probability
    prod |e^{i t_k} - e^{i t_j}|^beta / N^(N beta / 2); the bound is the
    Fekete (equally spaced) maximum of the Vandermonde modulus.
    """
    if N > _REJECTION_MAX_N:
        raise ValueError(f"rejection sampling limited to N <= {_REJECTION_MAX_N}, got {N}")
    if N < 1 or beta <= 0:
        raise ValueError("need N >= 1 and beta > 0")
    rng = generator(key)
    if N == 1:
        return rng.uniform(0.0, 2.0 * np.pi, 1)
    log_bound = 0.5 * N * beta * np.log(N)
    batch = 128
    while True:
        props = rng.uniform(0.0, 2.0 * np.pi, (batch, N))
        z = np.exp(1j * props)
        log_w = np.zeros(batch)
        for a in range(N - 1):
            for b in range(a + 1, N):
                log_w += beta * np.log(np.abs(z[:, a] - z[:, b]))
        accept = np.log(rng.random(batch)) < log_w - log_bound
        hits = np.nonzero(accept)[0]
        if len(hits):
            return props[hits[0]]


def cbe_rejection_ensemble(N: int, beta: float, samples: int, key: StreamKey) -> np.ndarray:
    """(samples, N) matrix of rejection-sampled angles; replica r uses key.replica + r."""
    out = np.empty((samples, N), dtype=np.float64)
    for r in range(samples):
        out[r] = cbe_rejection_sample_smallN(N, beta, key.with_replica(key.replica + r))
    return out


def secular_from_angles(angles: np.ndarray) -> np.ndarray:
    """Coefficients of prod_j (1 - z e^{-i t_j}) for each row of angles."""
    angles = np.atleast_2d(np.asarray(angles, dtype=np.float64))
    rows, N = angles.shape
    coeffs = np.zeros((rows, N + 1), dtype=np.complex128)
    coeffs[:, 0] = 1.0
    for j in range(N):
        root = np.exp(-1j * angles[:, j])[:, None]
        coeffs[:, 1 : j + 2] = coeffs[:, 1 : j + 2] - root * coeffs[:, : j + 1]
    return coeffs
