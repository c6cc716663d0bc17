"""Fourier coefficients of the holomorphic multiplicative chaos.

The generating function is exp(sqrt(theta) * sum_k N_k z^k / sqrt(k)); its
coefficients c_n satisfy the exponential-of-series recurrence

    n c_n = sqrt(theta) * sum_{k=1}^{n} sqrt(k) N_k c_{n-k},      c_0 = 1,

obtained by differentiating the generating function.  The recurrence is the
primary O(n^2) evaluation; hmc_coefficients_bruteforce() sums the composition
formula directly and serves as the independent oracle.  Truncated
coefficients c_{n,q} use the same recurrence with N_k = 0 for k > q.

Also here: the block schedule and block-martingale approximants of c_n, the
bracket process of the block martingale, and the Parseval mass statistic
X_k(r), all of which consume the same truncated-coefficient machinery.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .moments import second_moment
from .rng import GaussianDraw, StreamKey, complex_normal_block, draw_values

try:
    from . import _kernels
except ImportError:  # numba not installed
    _kernels = None

_BRUTE_FORCE_MAX = 20


def _check_theta(theta: float, allow_zero: bool = True) -> float:
    theta = float(theta)
    lo_ok = theta >= 0.0 if allow_zero else theta > 0.0
    if not (lo_ok and theta <= 1.0):
        raise ValueError(f"theta must lie in {'[0, 1]' if allow_zero else '(0, 1]'}, got {theta}")
    return theta


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSeries:
    """Coefficients c_0..c_upto (truncation=None) or c_{.,q} (truncation=q)."""

    theta: float
    upto: int
    values: np.ndarray
    truncation: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", values)
        if len(values) != self.upto + 1:
            raise ValueError(f"expected {self.upto + 1} values, got {len(values)}")

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True)
class TestPolynomial:
    """p(z) = sum_{s=0}^{degree} coeffs[s] z^s; the degree is declared, not inferred."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        object.__setattr__(self, "coeffs", coeffs)
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if len(coeffs) != self.degree + 1:
            raise ValueError(f"expected {self.degree + 1} coefficients, got {len(coeffs)}")

    @classmethod
    def one(cls) -> "TestPolynomial":
        return cls(degree=0, coeffs=np.ones(1))

    def at_circle(self, angles: np.ndarray) -> np.ndarray:
        """p(e^{i angle}) for an array of angles."""
        z = np.exp(1j * np.asarray(angles, dtype=np.float64))
        out = np.zeros_like(z)
        for s in range(self.degree, -1, -1):
            out = out * z + self.coeffs[s]
        return out

    def coeff_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


ONE = TestPolynomial.one()


@dataclass(frozen=True)
class BlockSchedule:
    """Block boundaries n_k = (floor(delta n) + k floor(eps n)) ^ n, up to n_K = n."""

    n: int
    delta: float
    epsilon: float
    boundaries: np.ndarray
    K: int

    def blocks(self) -> Iterable[tuple[int, int, int]]:
        """Triples (n_k, q_lo, q_hi) with q ranging over n_k < q <= n_{k+1}."""
        for k in range(self.K):
            yield int(self.boundaries[k]), int(self.boundaries[k]) + 1, int(self.boundaries[k + 1])


def block_schedule(n: int, delta: float, epsilon: float) -> BlockSchedule:
    if not (0.0 < delta < 1.0 and 0.0 < epsilon < 1.0):
        raise ValueError(f"delta and epsilon must lie in (0, 1), got {delta}, {epsilon}")
    if n < 1 or math.floor(delta * n) < 1:
        raise ValueError(f"need floor(delta*n) >= 1, got n={n}, delta={delta}")
    step = math.floor(epsilon * n)
    first = math.floor(delta * n)
    if step < 1 and first < n:
        raise ValueError(f"floor(epsilon*n) = 0 cannot reach n (n={n}, epsilon={epsilon})")
    bounds = [min(first, n)]
    k = 0
    while bounds[-1] < n:
        k += 1
        bounds.append(min(first + k * step, n))
    return BlockSchedule(n=n, delta=delta, epsilon=epsilon, boundaries=np.array(bounds), K=k)


# ---------------------------------------------------------------------------
# Coefficient evaluation
# ---------------------------------------------------------------------------


def _weights(values: np.ndarray, theta: float, n: int, truncation: int | None = None) -> np.ndarray:
    """weights[k-1] = sqrt(theta * k) * N_k, zeroed beyond the truncation."""
    w = np.sqrt(theta * np.arange(1.0, n + 1.0)) * values[:n]
    if truncation is not None and truncation < n:
        w[truncation:] = 0.0
    return w


def _recurrence(weights: np.ndarray, n: int) -> np.ndarray:
    """Reference single-draw recurrence; c[m] for m = 0..n."""
    c = np.zeros(n + 1, dtype=np.complex128)
    c[0] = 1.0
    for m in range(1, n + 1):
        c[m] = np.dot(weights[:m][::-1], c[:m]) / m
    return c


def _recurrence_batch_numpy(weights: np.ndarray, n: int) -> np.ndarray:
    rows = weights.shape[0]
    rev = weights[:, ::-1].copy()  # rev[:, (n-1) - (k-1)] = weights[:, k-1]
    c = np.zeros((rows, n + 1), dtype=np.complex128)
    c[:, 0] = 1.0
    for m in range(1, n + 1):
        c[:, m] = np.einsum("rj,rj->r", c[:, :m], rev[:, n - m : n]) / m
    return c


def recurrence_batch(weights: np.ndarray, n: int, engine: str = "auto") -> np.ndarray:
    """Batched coefficient recurrence; rows are independent replicas."""
    if engine not in ("auto", "numpy", "numba"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "numba" and _kernels is None:
        raise RuntimeError("numba engine requested but numba is not installed")
    if engine in ("auto", "numba") and _kernels is not None:
        return _kernels.exp_series_batch(np.ascontiguousarray(weights[:, :n]), n)
    return _recurrence_batch_numpy(np.asarray(weights)[:, :n], n)


def hmc_coefficients(draw, theta: float, n: int) -> CoefficientSeries:
    """Untruncated coefficients c_0..c_n from a Gaussian prefix of length >= n."""
    theta = _check_theta(theta)
    values = draw_values(draw, n)
    return CoefficientSeries(theta=theta, upto=n, values=_recurrence(_weights(values, theta, n), n))


def truncated_coefficients(draw, theta: float, n: int, q: int) -> CoefficientSeries:
    """Coefficients c_{m, q} for m = 0..n: N_k treated as 0 for k > q."""
    theta = _check_theta(theta)
    if q < 0:
        raise ValueError(f"truncation must be nonnegative, got {q}")
    values = draw_values(draw, min(n, q))
    if len(values) < n:
        values = np.concatenate([values, np.zeros(n - len(values), dtype=np.complex128)])
    c = _recurrence(_weights(values, theta, n, truncation=q), n)
    return CoefficientSeries(theta=theta, upto=n, values=c, truncation=q)


@functools.lru_cache(maxsize=None)
def _compositions(n: int):
    """Multiplicity vectors {k: m_k} with sum k*m_k = n (cached; treat as read-only)."""
    out = []

    def extend(remaining: int, k: int, current: dict):
        if remaining == 0:
            out.append(dict(current))
            return
        if k > remaining:
            return
        for j in range(remaining // k, -1, -1):
            if j:
                current[k] = j
            extend(remaining - j * k, k + 1, current)
            if j:
                current.pop(k, None)

    extend(n, 1, {})
    return tuple(out)


def hmc_coefficients_bruteforce(draw, theta: float, n: int) -> CoefficientSeries:
    """Oracle evaluation: direct sum over all compositions of each m <= n.

    c_m = sum over {m_k : sum k m_k = m} of prod_k (N_k^{m_k} / m_k!) (theta/k)^{m_k/2}.
    Exponential enumeration; limited to n <= 20.
    """
    theta = _check_theta(theta)
    if n > _BRUTE_FORCE_MAX:
        raise ValueError(f"brute-force enumeration limited to n <= {_BRUTE_FORCE_MAX}, got {n}")
    values = draw_values(draw, n)
    c = np.zeros(n + 1, dtype=np.complex128)
    c[0] = 1.0
    for m in range(1, n + 1):
        total = 0.0 + 0.0j
        for comp in _compositions(m):
            term = 1.0 + 0.0j
            for k, mk in comp.items():
                term *= values[k - 1] ** mk / math.factorial(mk) * (theta / k) ** (mk / 2.0)
            total += term
        c[m] = total
    return CoefficientSeries(theta=theta, upto=n, values=c)


def coefficient_ensemble(
    theta: float,
    n: int,
    samples: int,
    key: StreamKey,
    keep: Sequence[int] | None = None,
    engine: str = "auto",
    chunk: int = 2048,
    threads: int = 1,
) -> np.ndarray:
    """(samples, len(keep)) matrix of coefficients c_m at the kept indices.

    Replica r consumes the stream of ``key.replica + r``; results do not
    depend on chunking or thread count (chunks are merged in index order).
    """
    theta = _check_theta(theta)
    keep = [n] if keep is None else list(keep)
    if max(keep) > n:
        raise ValueError("kept indices must be <= n")
    out = np.empty((samples, len(keep)), dtype=np.complex128)

    def run_chunk(lo: int) -> None:
        rows = min(chunk, samples - lo)
        draws = complex_normal_block(key.with_replica(key.replica + lo), rows, n)
        w = np.sqrt(theta * np.arange(1.0, n + 1.0)) * draws
        c = recurrence_batch(w, n, engine=engine)
        out[lo : lo + rows] = c[:, keep]

    starts = list(range(0, samples, chunk))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for lo in starts:
            run_chunk(lo)
    return out


def truncated_ensemble(
    theta: float,
    n: int,
    truncations: Sequence[int],
    samples: int,
    key: StreamKey,
    engine: str = "auto",
    chunk: int = 2048,
) -> np.ndarray:
    """(samples, len(truncations)) matrix of c_{n, q}, common draws across q."""
    theta = _check_theta(theta)
    out = np.empty((samples, len(truncations)), dtype=np.complex128)
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        draws = complex_normal_block(key.with_replica(key.replica + lo), rows, n)
        w_full = np.sqrt(theta * np.arange(1.0, n + 1.0)) * draws
        for j, q in enumerate(truncations):
            w = w_full.copy()
            if q < n:
                w[:, q:] = 0.0
            out[lo : lo + rows, j] = recurrence_batch(w, n, engine=engine)[:, n]
    return out


# ---------------------------------------------------------------------------
# Martingale approximants and bracket process
# ---------------------------------------------------------------------------


def martingale_approx_delta(draw, theta: float, n: int, delta: float) -> complex:
    """Single-scale martingale approximant of c_n.

    sum_{q=max(1, floor(delta n))}^{n} N_q sqrt(theta/q) c_{n-q, q-1}.
    """
    theta = _check_theta(theta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    values = draw_values(draw, n)
    q0 = max(1, math.floor(delta * n))
    total = 0.0 + 0.0j
    for q in range(q0, n + 1):
        c = truncated_coefficients(values, theta, n - q, q - 1)
        total += values[q - 1] * math.sqrt(theta / q) * c[n - q]
    return complex(total)


def _block_coefficients(values: np.ndarray, theta: float, n: int, schedule: BlockSchedule,
                        p: TestPolynomial) -> tuple[np.ndarray, np.ndarray]:
    """Predictable weights A_q = sqrt(theta/n_k) sum_s d_s c_{n-q+s, n_k}.

    Returns (qs, A) with q running over all blocks.  The block-martingale
    approximant is sum_q N_q A_q and the bracket is sum_q |A_q|^2 / E|c_n|^2.
    """
    ell = p.degree
    qs_all, a_all = [], []
    for n_k, q_lo, q_hi in schedule.blocks():
        length = n - q_lo + ell  # largest index needed at this truncation
        c = truncated_coefficients(values, theta, length, n_k)
        qs = np.arange(q_lo, q_hi + 1)
        inner = np.zeros(len(qs), dtype=np.complex128)
        for s in range(ell + 1):
            inner += p.coeffs[s] * c.values[n - qs + s]
        qs_all.append(qs)
        a_all.append(math.sqrt(theta / n_k) * inner)
    return np.concatenate(qs_all), np.concatenate(a_all)


def martingale_approx_block(draw, theta: float, n: int, delta: float, epsilon: float,
                            p: TestPolynomial = ONE) -> complex:
    """Block-martingale approximant of X_n[p] = sum_s d_s c_{n+s}.

    sum_{k<K} sum_{q=n_k+1}^{n_{k+1}} N_q sqrt(theta/n_k) sum_s d_s c_{n-q+s, n_k}.
    """
    theta = _check_theta(theta)
    schedule = block_schedule(n, delta, epsilon)
    values = draw_values(draw, n + p.degree)
    qs, a = _block_coefficients(values, theta, n, schedule, p)
    return complex(np.sum(values[qs - 1] * a))


def bracket_process(draw, theta: float, n: int, delta: float, epsilon: float,
                    p: TestPolynomial = ONE) -> float:
    """Bracket of the block martingale, normalized by E|c_n|^2.

    (E|c_n|^2)^{-1} sum_{k<K} sum_q (theta/n_k) |sum_s d_s c_{n-q+s, n_k}|^2.
    """
    theta = _check_theta(theta, allow_zero=False)
    schedule = block_schedule(n, delta, epsilon)
    values = draw_values(draw, n + p.degree)
    _, a = _block_coefficients(values, theta, n, schedule, p)
    return float(np.sum(np.abs(a) ** 2) / second_moment(n, theta))


def block_martingale_ensemble(
    theta: float,
    n: int,
    delta: float,
    epsilon: float,
    p: TestPolynomial,
    samples: int,
    key: StreamKey,
    engine: str = "auto",
    chunk: int = 1024,
) -> dict:
    """Replicated block-martingale statistics from common draws.

    Returns arrays 'approx' (the approximant of X_n[p]), 'bracket', and
    'direct' (X_n[p] from the untruncated coefficients), one entry per
    replica.
    """
    theta = _check_theta(theta, allow_zero=False)
    schedule = block_schedule(n, delta, epsilon)
    ell = p.degree
    sm = second_moment(n, theta)
    approx = np.empty(samples, dtype=np.complex128)
    bracket = np.empty(samples, dtype=np.float64)
    direct = np.empty(samples, dtype=np.complex128)
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        draws = complex_normal_block(key.with_replica(key.replica + lo), rows, n + ell)
        w_full = np.sqrt(theta * np.arange(1.0, n + ell + 1.0)) * draws
        c_full = recurrence_batch(w_full, n + ell, engine=engine)
        direct[lo : lo + rows] = c_full[:, n : n + ell + 1] @ p.coeffs
        acc_a = np.zeros(rows, dtype=np.complex128)
        acc_b = np.zeros(rows, dtype=np.float64)
        for n_k, q_lo, q_hi in schedule.blocks():
            length = n - q_lo + ell
            w = w_full[:, :length].copy()
            if n_k < length:
                w[:, n_k:] = 0.0
            c = recurrence_batch(w, length, engine=engine)
            qs = np.arange(q_lo, q_hi + 1)
            inner = np.zeros((rows, len(qs)), dtype=np.complex128)
            for s in range(ell + 1):
                inner += p.coeffs[s] * c[:, n - qs + s]
            a = math.sqrt(theta / n_k) * inner
            acc_a += np.einsum("rq,rq->r", draws[:, qs - 1], a)
            acc_b += np.sum(np.abs(a) ** 2, axis=1)
        approx[lo : lo + rows] = acc_a
        bracket[lo : lo + rows] = acc_b / sm
    return {"approx": approx, "bracket": bracket, "direct": direct}


# ---------------------------------------------------------------------------
# Parseval mass statistic
# ---------------------------------------------------------------------------


def variance_vk(k: int, r: float) -> float:
    """V_k(r) = 2 sum_{l=1}^{k} r^{2l} / l, the variance of the truncated field."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if k == 0:
        return 0.0
    ls = np.arange(1.0, k + 1.0)
    return float(2.0 * np.sum(r ** (2.0 * ls) / ls))


def mass_tail_bound(theta: float, r: float, tail_n: int, p: TestPolynomial) -> float:
    """Upper bound on sum_{n > tail_n} E|sum_s d_s c_{n+s,k}|^2 r^{2n}.

    Uses E|c_{m,k}|^2 <= E|c_m|^2 <= E|c_{tail_n+1}|^2 for m > tail_n
    (the second moment is nonincreasing for theta <= 1) and the geometric
    tail of r^{2n}.
    """
    amp = float(np.sum(np.abs(p.coeffs))) ** 2
    return amp * second_moment(tail_n + 1, theta) * r ** (2.0 * (tail_n + 1)) / (1.0 - r * r)


def mass_statistic(draw, theta: float, k: int, r: float, p: TestPolynomial = ONE,
                   tail_n: int | None = None) -> float:
    """X_k(r) = (sum_{n<=tail_n} |sum_s d_s c_{n+s,k}|^2 r^{2n}) exp(-theta V_k(r)/2).

    When tail_n is omitted it grows until the analytic tail bound falls below
    1e-8 of the running value, making the truncation certified.
    """
    theta = _check_theta(theta, allow_zero=False)
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    values = draw_values(draw, min(k, 1))
    ell = p.degree

    def partial(upto: int) -> float:
        c = truncated_coefficients(values, theta, upto + ell, k)
        ns = np.arange(upto + 1)
        inner = np.zeros(upto + 1, dtype=np.complex128)
        for s in range(ell + 1):
            inner += p.coeffs[s] * c.values[ns + s]
        return float(np.sum(np.abs(inner) ** 2 * r ** (2.0 * ns)))

    if tail_n is not None:
        total = partial(tail_n)
        bound = mass_tail_bound(theta, r, tail_n, p)
        if bound > 1e-8 * total:
            raise ValueError(
                f"tail_n={tail_n} leaves a tail bound {bound:.3e} above 1e-8 of the value"
            )
    else:
        tail_n = max(2 * k, 64)
        while True:
            total = partial(tail_n)
            if mass_tail_bound(theta, r, tail_n, p) <= 1e-8 * total:
                break
            tail_n *= 2
            if tail_n > 10**6:
                raise RuntimeError("mass_statistic tail did not certify below n = 1e6")
    return total * math.exp(-theta * variance_vk(k, r) / 2.0)
