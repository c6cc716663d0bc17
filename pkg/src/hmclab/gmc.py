"""Gaussian multiplicative chaos on the circle: masses, Toeplitz forms, limit laws.

The truncated real field is G_k(e^{i t}) = 2 Re sum_{l<=k} e^{i l t} N_l / sqrt(l);
exponentiating with the variance renormalization exp(-theta V_k / 2) gives a
mean-one weight whose grid average approximates the total chaos mass.  The
limit laws of the normalized coefficients are sqrt(mass) * Z (scalar) and
sqrt(H) (Z_0..Z_l) (joint over shifts), with H the Toeplitz matrix of the
chaos measure's Fourier coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .rng import Lane, StreamKey, complex_normal_block, complex_normal_stream, draw_values
from .series import ONE, TestPolynomial, variance_vk


@dataclass(frozen=True)
class FieldGrid:
    """Truncated log-correlated field sampled on the uniform J-point grid."""

    k: int
    J: int
    values: np.ndarray


@dataclass(frozen=True)
class ToeplitzMass:
    """Hermitian PSD Toeplitz matrix of grid-chaos Fourier coefficients."""

    ell: int
    H: np.ndarray


def _check_resolution(k: int, J: int) -> None:
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if J < max(4 * k, 4):
        raise ValueError(f"grid must satisfy J >= 4k, got J={J}, k={k}")


def _field_values(values: np.ndarray, k: int, J: int, r: float) -> np.ndarray:
    """G_k(r e^{i theta_j}) on theta_j = 2 pi j / J via harmonic synthesis."""
    a = np.zeros(J, dtype=np.complex128)
    if k > 0:
        ls = np.arange(1.0, k + 1.0)
        a[1 : k + 1] = values[:k] * r**ls / np.sqrt(ls)
    return 2.0 * np.real(np.fft.ifft(a) * J)


def field_on_grid(draw, k: int, J: int, r: float = 1.0) -> FieldGrid:
    """Field values on the grid; fast synthesis, matches direct summation to 1e-10."""
    _check_resolution(k, J)
    values = draw_values(draw, k)
    return FieldGrid(k=k, J=J, values=_field_values(values, k, J, r))


def _grid_weights(values: np.ndarray, theta: float, k: int, J: int, r: float) -> np.ndarray:
    g = _field_values(values, k, J, r)
    return np.exp(np.sqrt(theta) * g - theta * variance_vk(k, r) / 2.0)


def gmc_mass_grid(draw, theta: float, k: int, J: int, p: TestPolynomial = ONE,
                  r: float = 1.0) -> float:
    """Grid estimate of the weighted chaos mass.

    (1/J) sum_j |p(e^{i theta_j})|^2 exp(sqrt(theta) G_k(r e^{i theta_j})
    - theta V_k(r)/2).  The weight has mean one, so the expectation is
    sum_s |d_s|^2.
    """
    _check_resolution(k, J)
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    values = draw_values(draw, k)
    w = _grid_weights(values, theta, k, J, r)
    angles = 2.0 * np.pi * np.arange(J) / J
    return float(np.mean(np.abs(p.at_circle(angles)) ** 2 * w))


def toeplitz_mass(draw, theta: float, k: int, J: int, ell: int) -> ToeplitzMass:
    """Toeplitz matrix H[k1,k2] = (1/J) sum_j e^{i theta_j (k1-k2)} w_j, 0 <= k1,k2 <= ell."""
    _check_resolution(k, J)
    if ell < 0:
        raise ValueError(f"ell must be nonnegative, got {ell}")
    if ell >= J:
        raise ValueError("ell must be smaller than the grid size")
    values = draw_values(draw, k)
    w = _grid_weights(values, theta, k, J, 1.0)
    diag = np.fft.ifft(w)[: ell + 1]  # (1/J) sum_j w_j e^{i theta_j d}
    return ToeplitzMass(ell=ell, H=toeplitz(diag, np.conj(diag)))


def psd_sqrt(H: np.ndarray) -> tuple[np.ndarray, float]:
    """Principal square root of a Hermitian PSD matrix via eigendecomposition.

    Negative eigenvalues (rounding noise) are clamped to zero; the clamp
    magnitude is returned alongside.
    """
    vals, vecs = np.linalg.eigh(H)
    clamp = float(max(0.0, -vals.min())) if len(vals) else 0.0
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ np.conj(vecs.T), clamp


def limit_law_sample(theta: float, ell: int, k: int, J: int, key: StreamKey) -> np.ndarray:
    """One draw of sqrt(H) (Z_0..Z_ell).

    H comes from a fresh field draw on stream replica 2*key.replica; the
    normals Z come from the independent stream replica 2*key.replica + 1.
    """
    field_key = key.with_replica(2 * key.replica)
    z_key = key.with_replica(2 * key.replica + 1)
    field = complex_normal_stream(field_key, k)
    H = toeplitz_mass(field, theta, k, J, ell).H
    root, _ = psd_sqrt(H)
    z = complex_normal_stream(z_key, ell + 1)
    return root @ z


def limit_law_ensemble(theta: float, ell: int, k: int, J: int, samples: int,
                       key: StreamKey, chunk: int = 1024) -> np.ndarray:
    """(samples, ell+1) matrix of limit-law draws; row r uses key.replica + r."""
    out = np.empty((samples, ell + 1), dtype=np.complex128)
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        base = key.replica + lo
        fields = np.empty((rows, k), dtype=np.complex128)
        zs = np.empty((rows, ell + 1), dtype=np.complex128)
        for r in range(rows):
            fields[r] = complex_normal_stream(key.with_replica(2 * (base + r)), k)
            zs[r] = complex_normal_stream(key.with_replica(2 * (base + r) + 1), ell + 1)
        a = np.zeros((rows, J), dtype=np.complex128)
        ls = np.arange(1.0, k + 1.0)
        a[:, 1 : k + 1] = fields / np.sqrt(ls)
        g = 2.0 * np.real(np.fft.ifft(a, axis=1) * J)
        w = np.exp(np.sqrt(theta) * g - theta * variance_vk(k, 1.0) / 2.0)
        diag = np.fft.ifft(w, axis=1)[:, : ell + 1]
        H = np.empty((rows, ell + 1, ell + 1), dtype=np.complex128)
        for d in range(-ell, ell + 1):
            vals = diag[:, d] if d >= 0 else np.conj(diag[:, -d])
            idx = np.arange(max(0, d), min(ell + 1, ell + 1 + d))
            H[:, idx, idx - d] = vals[:, None]
        vals, vecs = np.linalg.eigh(H)
        vals = np.clip(vals, 0.0, None)
        root = np.einsum("rij,rj,rkj->rik", vecs, np.sqrt(vals), np.conj(vecs))
        out[lo : lo + rows] = np.einsum("rij,rj->ri", root, zs)
    return out


def mass_samples(theta: float, k: int, J: int, samples: int, key: StreamKey,
                 p: TestPolynomial = ONE, chunk: int = 2048) -> np.ndarray:
    """Replicated gmc_mass_grid values; row r uses stream replica key.replica + r."""
    out = np.empty(samples, dtype=np.float64)
    angles = 2.0 * np.pi * np.arange(J) / J
    psq = np.abs(p.at_circle(angles)) ** 2
    ls = np.arange(1.0, k + 1.0)
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        fields = complex_normal_block(key.with_replica(key.replica + lo), rows, k)
        a = np.zeros((rows, J), dtype=np.complex128)
        a[:, 1 : k + 1] = fields / np.sqrt(ls)
        g = 2.0 * np.real(np.fft.ifft(a, axis=1) * J)
        w = np.exp(np.sqrt(theta) * g - theta * variance_vk(k, 1.0) / 2.0)
        out[lo : lo + rows] = np.mean(psq * w, axis=1)
    return out
