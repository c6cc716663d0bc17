"""Deterministic, splittable random streams.

Every stream is identified by a (seed, replica, lane) triple and is backed by
the counter-based Philox generator, so distinct triples give statistically
independent streams by construction and the same triple always reproduces the
identical variate sequence.  Replicated Monte Carlo assigns one stream per
replica, which makes results independent of chunking, threading and
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

_MASK64 = (1 << 64) - 1

SQRT_HALF = np.sqrt(0.5)


class Lane(Enum):
    """Purpose tag keeping the stream families of one seed apart."""

    HMC = 0
    EWENS = 1
    CBE = 2
    GMC = 3


@dataclass(frozen=True)
class StreamKey:
    """Identity of one random stream."""

    seed: int
    replica: int = 0
    lane: Lane = Lane.HMC

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= int(self.replica) <= _MASK64:
            raise ValueError(f"replica must be a 64-bit unsigned integer, got {self.replica}")
        if not isinstance(self.lane, Lane):
            raise TypeError(f"lane must be a Lane member, got {self.lane!r}")

    def with_replica(self, replica: int) -> "StreamKey":
        return StreamKey(self.seed, replica, self.lane)

    def with_lane(self, lane: Lane) -> "StreamKey":
        return StreamKey(self.seed, self.replica, lane)


def generator(key: StreamKey) -> np.random.Generator:
    """Philox generator for one stream key."""
    replica = int(key.replica)
    seq = np.random.SeedSequence(
        entropy=int(key.seed),
        spawn_key=(key.lane.value, replica & 0xFFFFFFFF, replica >> 32),
    )
    return np.random.Generator(np.random.Philox(seq))


def complex_normal_stream(key: StreamKey, count: int) -> np.ndarray:
    """`count` i.i.d. standard complex normals from the keyed stream.

    Each draw has independent real and imaginary parts of variance 1/2, so
    E N = 0, E N^2 = 0 and E |N|^2 = 1.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    z = generator(key).standard_normal(2 * count)
    return SQRT_HALF * (z[0::2] + 1j * z[1::2])


def complex_normal_block(key: StreamKey, samples: int, count: int) -> np.ndarray:
    """(samples, count) complex normals; row r uses replica ``key.replica + r``."""
    out = np.empty((samples, count), dtype=np.complex128)
    for r in range(samples):
        out[r] = complex_normal_stream(key.with_replica(key.replica + r), count)
    return out


def uniform_block(key: StreamKey, samples: int, count: int) -> np.ndarray:
    """(samples, count) uniforms on [0,1); row r uses replica ``key.replica + r``."""
    out = np.empty((samples, count), dtype=np.float64)
    for r in range(samples):
        out[r] = generator(key.with_replica(key.replica + r)).random(count)
    return out


def beta_variate(key: StreamKey, a: float, b: float) -> float:
    """One Beta(a, b) draw from the keyed stream."""
    if a <= 0 or b <= 0:
        raise ValueError(f"Beta parameters must be positive, got a={a}, b={b}")
    return float(generator(key).beta(a, b))


@dataclass(frozen=True)
class GaussianDraw:
    """A finite prefix N_1..N_k of i.i.d. standard complex normals.

    Keeps the stream identity that produced it so an experiment can be
    reproduced from the record alone.
    """

    values: np.ndarray
    key: StreamKey | None = field(default=None, compare=False)

    @classmethod
    def sample(cls, key: StreamKey, count: int) -> "GaussianDraw":
        return cls(values=complex_normal_stream(key, count), key=key)

    def __len__(self) -> int:
        return len(self.values)


def draw_values(draw, minimum: int) -> np.ndarray:
    """Complex array behind a GaussianDraw (or bare array), length-checked."""
    values = draw.values if isinstance(draw, GaussianDraw) else np.asarray(draw, dtype=np.complex128)
    if values.ndim != 1:
        raise ValueError("draw must be one-dimensional")
    if len(values) < minimum:
        raise ValueError(f"draw has {len(values)} variates but {minimum} are required")
    return values
