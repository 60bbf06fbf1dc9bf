"""Counter-based random numbers keyed by (seed, rollout, stream, counter, lane).

Every draw is a pure function of its coordinates, built from the SplitMix64
finalizer, so a batch of rollouts can be advanced in lockstep with numpy and
still produce exactly the numbers each rollout would see on its own.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / float(1 << 53)


class StreamId(enum.IntEnum):
    """Disjoint purposes so that draws for one never alias another."""

    CONDITION = 1
    GUST = 2
    SENSOR = 3
    POLICY = 4
    OUTCOME = 5


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash64(*parts) -> np.ndarray:
    """Chain-mix integer (or uint64 array) components into a 64-bit hash."""
    with np.errstate(over="ignore"):
        h = np.zeros((), dtype=np.uint64)
        for part in parts:
            if isinstance(part, (int, np.integer)):
                part = np.uint64(int(part) & _MASK64)
            h = _mix(np.asarray(h ^ np.asarray(part, dtype=np.uint64)))
        return h


def derive_key(*parts: int) -> int:
    """Scalar convenience wrapper returning a Python int."""
    return int(hash64(*parts))


def uniform(keys, counter: int, lane: int = 0) -> np.ndarray:
    """Uniform draws in the open interval (0, 1), one per key."""
    h = hash64(np.asarray(keys, dtype=np.uint64), counter, lane)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def normal(keys, counter: int, lane: int = 0) -> np.ndarray:
    """Standard normal draws by inverse-CDF transform of :func:`uniform`."""
    return ndtri(uniform(keys, counter, lane))


def stream_key(seed: int, stream: StreamId | int) -> int:
    return derive_key(seed, int(stream))


def stream_keys(seeds: np.ndarray, stream: StreamId | int) -> np.ndarray:
    return hash64(np.asarray(seeds, dtype=np.uint64), int(stream))


class Stream:
    """Scalar cursor over one key: each call consumes one counter position."""

    def __init__(self, key: int, position: int = 0) -> None:
        self.key = int(key) & _MASK64
        self.position = position

    @classmethod
    def for_seed(cls, seed: int, stream: StreamId | int) -> Stream:
        return cls(stream_key(seed, stream))

    def uniform(self, lanes: int = 1) -> np.ndarray:
        out = np.array([uniform([self.key], self.position, lane)[0] for lane in range(lanes)])
        self.position += 1
        return out

    def normal(self, lanes: int = 1) -> np.ndarray:
        out = np.array([normal([self.key], self.position, lane)[0] for lane in range(lanes)])
        self.position += 1
        return out
