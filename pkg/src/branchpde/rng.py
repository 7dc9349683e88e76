"""Splittable counter-based uniform streams.

Each stream is a single 64-bit key; draw ``i`` is ``mix64(key + (i+1)*GAMMA)``
(SplitMix64 in counter mode) and child stream ``j`` re-keys through the mixer
with a distinct additive constant.  Two properties matter here:

* draws are a pure function of ``(key, counter)``, so scalar and vectorized
  simulation paths produce identical numbers, and
* child derivation is cheap and order-free, so a particle's randomness
  depends only on its label path, never on traversal order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA_DRAW = 0x9E3779B97F4A7C15
_GAMMA_SPLIT = 0xD1B54A32D192ED03
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

_U64_GAMMA_DRAW = np.uint64(_GAMMA_DRAW)
_U64_MIX_A = np.uint64(_MIX_A)
_U64_MIX_B = np.uint64(_MIX_B)
_INV_2_53 = float(2.0 ** -53)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on python ints (mod 2^64)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX_A
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX_B
    return z ^ (z >> np.uint64(31))


def uniforms_from_keys(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Vectorized draws: uniform in [0,1) for each (key, counter) pair.

    ``keys`` and ``counters`` broadcast against each other (uint64).
    """
    z = keys + (counters + np.uint64(1)) * _U64_GAMMA_DRAW
    bits = _mix64_np(z) >> np.uint64(11)
    return bits.astype(np.float64) * _INV_2_53


def child_keys(keys: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Vectorized stream split: key of child ``indices`` of each stream."""
    z = keys + (indices.astype(np.uint64) + np.uint64(1)) * np.uint64(_GAMMA_SPLIT)
    return _mix64_np(z)


class Stream:
    """A splittable counter-based uniform stream.

    Supports the tiny protocol the samplers rely on (``random``), plus
    vectorized draws and child derivation.  Streams are cheap value objects;
    ``child(i)`` never perturbs the parent.
    """

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & _MASK64
        self.counter = counter

    @classmethod
    def from_seed(cls, seed: int) -> "Stream":
        return cls(mix64(mix64(seed & _MASK64) ^ 0x5851F42D4C957F2D))

    def child(self, index: int) -> "Stream":
        return Stream(mix64((self.key + (index + 1) * _GAMMA_SPLIT) & _MASK64))

    def random(self) -> float:
        """Next uniform in [0, 1)."""
        self.counter += 1
        return (mix64((self.key + self.counter * _GAMMA_DRAW) & _MASK64) >> 11) * _INV_2_53

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms as a vector (advances the counter by ``n``)."""
        counters = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return uniforms_from_keys(np.uint64(self.key), counters)

    def exponential(self, rate: float) -> float:
        return -np.log1p(-self.random()) / rate

    def __repr__(self) -> str:  # pragma: no cover
        return f"Stream(key={self.key:#018x}, counter={self.counter})"
