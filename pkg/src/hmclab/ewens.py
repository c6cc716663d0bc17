"""Ewens sampling formula machinery.

Exact cycle-count pmf and sampler, the longest-cycle law, the weighted
Poisson sum T_0n, the limiting Dickman-type density p_theta, Kingman's
limiting distribution F_theta of the rescaled longest cycle, and the
quadrature constants C_delta and A(theta, delta, epsilon) built from it.

The density p_theta is the weak limit of T_0n / n.  It is constructed here
from the closed form

    p_theta(y) = exp(-gamma_E * theta) * y**(theta-1) / Gamma(theta),   0 < y <= 1,

continued to y > 1 by the delay-integral equation

    y * p_theta(y) = theta * int_{y-1}^{y} p_theta(u) du.

On (1, 2] the continuation has an exact hypergeometric form (solving the
delay equation with the known (0,1] history as forcing); beyond 2 the
equation is stepped on a uniform grid with an implicit trapezoid rule.
The construction is validated by three independent oracles: the Laplace
transform limit of T_0n/n, a Monte Carlo histogram of T_0n/n, and the
closed-form/quadrature identity for C_delta.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma as gamma_fn
from scipy.special import gammaln, hyp2f1

from .rng import Lane, StreamKey, generator, uniform_block

EULER_GAMMA = float(np.euler_gamma)


class CoverageError(ValueError):
    """The Dickman table does not extend far enough for the request."""


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    return theta


def _log_normalizer(n: int, theta: float) -> float:
    # log binom(n + theta - 1, theta - 1) = log Gamma(n+theta) - log Gamma(theta) - log n!
    return float(gammaln(n + theta) - gammaln(theta) - gammaln(n + 1.0))


# ---------------------------------------------------------------------------
# Cycle counts: pmf and sampler
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CycleCounts:
    """Cycle-type vector (m_1..m_n) of a permutation of n symbols."""

    n: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.n:
            raise ValueError(f"counts must have length n={self.n}, got {len(counts)}")
        if np.any(counts < 0):
            raise ValueError("cycle counts must be nonnegative")
        weighted = int(np.sum(np.arange(1, self.n + 1) * counts))
        if weighted != self.n:
            raise ValueError(f"sum of k*m_k is {weighted}, expected n={self.n}")

    @property
    def longest(self) -> int:
        nz = np.nonzero(self.counts)[0]
        return int(nz[-1] + 1) if len(nz) else 0


def ewens_pmf(m: CycleCounts, theta: float) -> float:
    """Probability of the cycle-count vector under the Ewens measure."""
    theta = float(theta)
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    ks = np.arange(1, m.n + 1, dtype=np.float64)
    mk = m.counts.astype(np.float64)
    log_num = np.sum(mk * (np.log(theta) - np.log(ks)) - gammaln(mk + 1.0))
    return float(np.exp(log_num - _log_normalizer(m.n, theta)))


def ewens_sample(n: int, theta: float, key: StreamKey) -> CycleCounts:
    """Exact Ewens sample via the sequential Chinese-restaurant construction.

    Element i starts a new cycle with probability theta/(theta+i-1) and
    otherwise is inserted after a uniformly chosen existing element, so the
    cycle it joins is size-biased.  One uniform drives both decisions.
    O(n) time.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    theta = float(theta)
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    u = generator(key).random(n - 1) if n > 1 else np.empty(0)
    cycle_of = np.zeros(n, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    sizes[0] = 1
    n_cycles = 1
    for i in range(1, n):  # element i+1, i existing elements
        p_new = theta / (theta + i)
        if u[i - 1] < p_new:
            cycle_of[i] = n_cycles
            sizes[n_cycles] = 1
            n_cycles += 1
        else:
            v = (u[i - 1] - p_new) / (1.0 - p_new)
            target = cycle_of[min(int(v * i), i - 1)]
            cycle_of[i] = target
            sizes[target] += 1
    counts = np.bincount(sizes[:n_cycles], minlength=n + 1)[1:]
    return CycleCounts(n=n, counts=counts)


def _crp_cycle_sizes(n: int, theta: float, rows: int, key: StreamKey):
    """Vectorized Chinese-restaurant pass; returns (sizes, n_cycles).

    Row r consumes the stream of replica ``key.replica + r`` and reproduces
    ewens_sample() for that key exactly.
    """
    u = uniform_block(key, rows, n - 1) if n > 1 else None
    cycle_of = np.zeros((rows, n), dtype=np.int32)
    sizes = np.zeros((rows, n + 1), dtype=np.int32)
    sizes[:, 0] = 1
    n_cycles = np.ones(rows, dtype=np.int32)
    rr = np.arange(rows)
    for i in range(1, n):
        ui = u[:, i - 1]
        p_new = theta / (theta + i)
        is_new = ui < p_new
        v = (ui - p_new) / (1.0 - p_new)
        pick = np.minimum((v * i).astype(np.int32), i - 1)
        target = cycle_of[rr, np.where(is_new, 0, pick)]
        cyc = np.where(is_new, n_cycles, target)
        cycle_of[:, i] = cyc
        sizes[rr, cyc] += 1
        n_cycles += is_new.astype(np.int32)
    return sizes, n_cycles


def ewens_sample_matrix(n: int, theta: float, samples: int, key: StreamKey) -> np.ndarray:
    """(samples, n) matrix of cycle counts; row r uses replica key.replica + r."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = float(theta)
    if theta <= 0 or n < 1:
        raise ValueError("need theta > 0 and n >= 1")
    out = np.zeros((samples, n), dtype=np.int32)
    chunk = max(1, int(1e7) // max(n, 1))
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        sizes, n_cycles = _crp_cycle_sizes(n, theta, rows, key.with_replica(key.replica + lo))
        for r in range(rows):
            lens = sizes[r, : n_cycles[r]]
            out[lo + r] = np.bincount(lens, minlength=n + 1)[1:]
    return out


def longest_cycle_samples(n: int, theta: float, samples: int, key: StreamKey) -> np.ndarray:
    """Longest-cycle length per replica (same streams as ewens_sample_matrix)."""
    out = np.empty(samples, dtype=np.int64)
    chunk = max(1, int(1e7) // max(n, 1))
    for lo in range(0, samples, chunk):
        rows = min(chunk, samples - lo)
        sizes, _ = _crp_cycle_sizes(n, theta, rows, key.with_replica(key.replica + lo))
        out[lo : lo + rows] = sizes.max(axis=1)
    return out


def prob_longest_at_most(n: int, q: int, theta: float) -> float:
    """P(longest cycle <= q) for an Ewens permutation of n symbols, exactly.

    Ratio of the z^n coefficient of exp(theta * sum_{k<=q} z^k / k) to
    binom(n+theta-1, theta-1), via an O(n q) dynamic program (sliding-window
    form, O(n) once the window is saturated).
    """
    if n < 0 or q < 0:
        raise ValueError("need n >= 0 and q >= 0")
    theta = float(theta)
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if q >= n:
        return 1.0
    if q == 0:
        return 0.0
    e = np.zeros(n + 1)
    e[0] = 1.0
    window = 1.0  # sum of e[m-q .. m-1], maintained incrementally
    for m in range(1, n + 1):
        e[m] = theta * window / m
        window += e[m]
        if m - q >= 0:
            window -= e[m - q]
    return float(e[n] * np.exp(-_log_normalizer(n, theta)))


# ---------------------------------------------------------------------------
# T_0n: Laplace transform and sampler
# ---------------------------------------------------------------------------


def t0n_laplace(n: int, theta: float, m: float) -> float:
    """E exp(-m T_0n / n) where T_0n = sum_j j Z_j, Z_j ~ Poisson(theta/j).

    Product form prod_j exp((theta/j)(exp(-j m/n) - 1)).
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    theta = float(theta)
    j = np.arange(1, n + 1, dtype=np.float64)
    return float(np.exp(theta * np.sum(np.expm1(-j * m / n) / j)))


def t0n_laplace_limit(theta: float, m: float) -> float:
    """Limit of t0n_laplace as n grows: exp(theta * int_0^1 (e^{-mx}-1)/x dx)."""
    val, _ = quad(lambda x: np.expm1(-m * x) / x, 0.0, 1.0, limit=200)
    return float(np.exp(theta * val))


def t0n_samples(n: int, theta: float, samples: int, key: StreamKey) -> np.ndarray:
    """Samples of T_0n / n.

    Uses Poisson superposition: the total number of atoms is
    Poisson(theta * H_n) and atom positions are i.i.d. with mass
    proportional to 1/j, which reproduces the law of sum_j j Z_j exactly.
    """
    theta = _check_theta(theta)
    weights = 1.0 / np.arange(1, n + 1)
    cdf = np.cumsum(weights) / np.sum(weights)
    rate = theta * np.sum(weights)
    out = np.empty(samples, dtype=np.float64)
    for r in range(samples):
        rng = generator(key.with_replica(key.replica + r))
        count = rng.poisson(rate)
        if count == 0:
            out[r] = 0.0
        else:
            js = 1 + np.searchsorted(cdf, rng.random(count))
            out[r] = js.sum() / n
    return out


# ---------------------------------------------------------------------------
# Dickman-type density table
# ---------------------------------------------------------------------------


def _amplitude(theta: float) -> float:
    return float(np.exp(-EULER_GAMMA * theta) / gamma_fn(theta))


def _density_closed(theta: float, y: np.ndarray) -> np.ndarray:
    """Exact p_theta on (0, 2]."""
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    amp = _amplitude(theta)
    out = np.zeros_like(y)
    low = (y > 0) & (y <= 1.0)
    out[low] = amp * y[low] ** (theta - 1.0)
    mid = (y > 1.0) & (y <= 2.0)
    if np.any(mid):
        t = (y[mid] - 1.0) / y[mid]
        out[mid] = amp * y[mid] ** (theta - 1.0) * (1.0 - t**theta * hyp2f1(1.0, theta, theta + 1.0, t))
    return out


@dataclass(frozen=True)
class DickmanTable:
    """Tabulated density p_theta of the T_0n/n limit on a uniform grid."""

    theta: float
    grid: np.ndarray
    density: np.ndarray
    prefix: np.ndarray  # prefix[i] = int_0^{grid[i]} p_theta
    step: float
    y_max: float

    def density_at(self, y) -> np.ndarray:
        """p_theta(y); exact closed form for y <= 2, linear interpolation beyond."""
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if np.any(y > self.y_max):
            raise CoverageError(
                f"density requested at y={y.max():g} beyond table range {self.y_max:g}"
            )
        out = np.zeros_like(y)
        closed = (y > 0) & (y <= 2.0)
        out[closed] = _density_closed(self.theta, y[closed])
        far = y > 2.0
        if np.any(far):
            out[far] = np.interp(y[far], self.grid, self.density)
        return out

    def cdf(self, y) -> np.ndarray:
        """int_0^y p_theta; exact for y <= 2, interpolated prefix beyond."""
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if np.any(y > self.y_max):
            raise CoverageError(f"cdf requested at y={y.max():g} beyond table range {self.y_max:g}")
        theta = self.theta
        out = np.zeros_like(y)
        head = (y > 0) & (y <= 1.0)
        out[head] = np.exp(-EULER_GAMMA * theta) * y[head] ** theta / gamma_fn(theta + 1.0)
        mid = (y > 1.0) & (y <= 2.0)
        if np.any(mid):
            # delay identity: P(y) = P(y-1) + y p(y) / theta
            prev = np.exp(-EULER_GAMMA * theta) * (y[mid] - 1.0) ** theta / gamma_fn(theta + 1.0)
            out[mid] = prev + y[mid] * _density_closed(theta, y[mid]) / theta
        far = y > 2.0
        if np.any(far):
            out[far] = np.interp(y[far], self.grid, self.prefix)
        return np.clip(out, 0.0, 1.0)

    def total_mass(self) -> float:
        """int_0^{y_max} p_theta."""
        return float(self.prefix[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["y", "p_theta"])
            for y, p in zip(self.grid, self.density):
                writer.writerow([f"{y:.17g}", f"{p:.17g}"])


def p_theta_density(theta: float, y_max: float = 16.0, step: float = 1.0 / 4096) -> DickmanTable:
    """Build the density table for p_theta on [0, y_max].

    The step is rounded so that the unit delay is an exact number of grid
    cells.  Values on (0, 2] come from closed forms; beyond 2 the table is
    produced by implicit-trapezoid stepping of the delay-integral equation,
    with the running integral kept exactly on the closed-form stretch.
    """
    theta = _check_theta(theta)
    if y_max < 2.0:
        raise ValueError(f"y_max must be >= 2, got {y_max}")
    if step > 1e-3:
        raise ValueError(f"step must be <= 1e-3, got {step}")
    n1 = int(round(1.0 / step))
    h = 1.0 / n1
    n_steps = int(np.ceil(y_max / h))
    grid = np.arange(n_steps + 1) * h
    dens = np.zeros(n_steps + 1)
    upto2 = min(2 * n1, n_steps)
    dens[1 : upto2 + 1] = _density_closed(theta, grid[1 : upto2 + 1])
    dens[0] = dens[1]  # y=0 endpoint is singular for theta<1; hold the first value
    # prefix[i] = int_0^{grid[i]} p: exact power law on [0,1], exact via the
    # delay identity P(y) = P(y-1) + y p(y)/theta on (1,2], trapezoid after.
    prefix = np.zeros(n_steps + 1)
    prefix[: n1 + 1] = np.exp(-EULER_GAMMA * theta) * grid[: n1 + 1] ** theta / gamma_fn(theta + 1.0)
    hi = min(2 * n1, n_steps)
    prefix[n1 + 1 : hi + 1] = prefix[1 : hi - n1 + 1] + grid[n1 + 1 : hi + 1] * dens[n1 + 1 : hi + 1] / theta
    for i in range(2 * n1 + 1, n_steps + 1):
        y = grid[i]
        rhs = prefix[i - 1] + 0.5 * h * dens[i - 1] - prefix[i - n1]
        dens[i] = (theta / y) * rhs / (1.0 - theta * h / (2.0 * y))
        prefix[i] = prefix[i - 1] + 0.5 * h * (dens[i - 1] + dens[i])
    return DickmanTable(theta=theta, grid=grid, density=dens, prefix=prefix,
                        step=h, y_max=float(grid[-1]))


def kingman_cdf(theta: float, x: float, table: DickmanTable) -> float:
    """Distribution function F_theta of the rescaled longest-cycle limit.

    F_theta(x) = e^{gamma_E theta} x^(theta-1) Gamma(theta) p_theta(1/x) on
    (0, 1], and 0 / 1 outside the support.
    """
    theta = _check_theta(theta)
    x = float(x)
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    p = float(table.density_at(1.0 / x)[0])
    val = np.exp(EULER_GAMMA * theta) * x ** (theta - 1.0) * gamma_fn(theta) * p
    return float(min(max(val, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Quadrature constants
# ---------------------------------------------------------------------------

_QUAD_OPTS = dict(limit=200, epsabs=1e-11, epsrel=1e-10)


def _quad_checked(fn, a, b) -> float:
    # the returned error estimate is gated below; the roundoff warning at
    # near-machine tolerances is expected and carries no extra information
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(fn, a, b, **_QUAD_OPTS)
    if err > 1e-8 * (1.0 + abs(val)):
        raise RuntimeError(f"quadrature did not converge on [{a}, {b}]: estimate {val}, error {err}")
    return val


def _panel(theta: float, a: float, lo: float, hi: float, table: DickmanTable) -> float:
    """int_lo^hi (1-x)^(theta-1) F_theta(a/(1-x)) dx, hi <= 1.

    The endpoint singularity at x=1 is removed by the substitution
    u = (1-x)^theta.
    """

    def f(x: float) -> float:
        if x >= 1.0:
            return 1.0
        return kingman_cdf(theta, a / (1.0 - x), table)

    split = min(hi, max(lo, 0.9))
    total = 0.0
    if lo < split:
        total += _quad_checked(lambda x: (1.0 - x) ** (theta - 1.0) * f(x), lo, split)
    if split < hi:
        u_lo = (1.0 - hi) ** theta if hi < 1.0 else 0.0
        u_hi = (1.0 - split) ** theta
        total += _quad_checked(lambda u: f(1.0 - u ** (1.0 / theta)), u_lo, u_hi) / theta
    return total


def c_delta_integral(theta: float, delta: float, table: DickmanTable) -> float:
    """C_delta = theta * int_delta^1 (1-x)^(theta-1) F_theta(x/(1-x)) dx / x by quadrature."""
    theta = _check_theta(theta)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if delta == 1.0:
        return 0.0

    def f(x: float) -> float:
        arg = x / (1.0 - x)
        return (kingman_cdf(theta, arg, table) if arg < 1.0 else 1.0) / x

    split = max(delta, 0.9)
    total = 0.0
    if delta < split:
        total += _quad_checked(lambda x: (1.0 - x) ** (theta - 1.0) * f(x), delta, split)
    total += _quad_checked(lambda u: f(1.0 - u ** (1.0 / theta)), 0.0, (1.0 - split) ** theta) / theta
    return theta * total


def c_delta_closed(theta: float, delta: float, table: DickmanTable) -> float:
    """C_delta in closed form: 1 - Gamma(theta) e^{gamma_E theta} delta^(theta-1) p_theta(1/delta)."""
    theta = _check_theta(theta)
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    p = float(table.density_at(1.0 / delta)[0])
    return float(1.0 - gamma_fn(theta) * np.exp(EULER_GAMMA * theta) * delta ** (theta - 1.0) * p)


def a_constant(theta: float, delta: float, epsilon: float, table: DickmanTable) -> float:
    """Limit constant of the bracket process of the block martingale.

    A(theta, delta, epsilon) = theta * sum_{k=0}^{K-1} (delta+k eps)^{-1}
        int_{delta+k eps}^{delta+(k+1) eps} (1-x)^(theta-1)
            F_theta((delta+k eps)/(1-x)) dx,
    with F_theta read as 1 past its support and the integrand truncated at
    x = 1; K is the smallest k with delta + K eps >= 1.
    """
    theta = _check_theta(theta)
    if not (0.0 < delta < 1.0 and 0.0 < epsilon < 1.0):
        raise ValueError(f"delta and epsilon must lie in (0, 1), got {delta}, {epsilon}")
    need = (1.0 - delta) / delta
    if need > table.y_max:
        raise CoverageError(
            f"a_constant with delta={delta} needs the density up to y={need:g}; "
            f"table covers {table.y_max:g}"
        )
    n_blocks = int(np.ceil((1.0 - delta) / epsilon - 1e-12))
    total = 0.0
    for k in range(n_blocks):
        a = delta + k * epsilon
        hi = min(a + epsilon, 1.0)
        total += _panel(theta, a, a, hi, table) / a
    return theta * total
