"""Deterministic, counter-based random streams.

Every random draw in this package comes from a SplitMix64 stream addressed by
a 64-bit key and a word counter: ``word(key, i) = mix64(key + (i + 1) * GAMMA)``
with the mix64 finalizer from Steele et al.'s SplittableRandom. Because each
word is a pure function of (key, index), streams can be evaluated out of order
and in parallel without changing results, and the algorithm is simple enough
to reimplement bit-for-bit in other languages.

Stream keys are derived from a user seed and string labels via FNV-1a (64-bit),
so e.g. per-subject streams never depend on subject iteration order.
"""

from __future__ import annotations

import math

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF

GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def fnv1a64(data: bytes | str) -> int:
    """64-bit FNV-1a hash of bytes (strings are hashed as UTF-8)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK
    return h


def derive_key(seed: int, *labels: str) -> int:
    """Stream key for (seed, labels): seed XOR FNV-1a over the labels.

    Labels are length-prefixed before hashing so ("ab", "c") and ("a", "bc")
    yield different keys.
    """
    h = FNV_OFFSET
    for label in labels:
        raw = label.encode("utf-8")
        for byte in f"{len(raw)}:".encode("ascii"):
            h = ((h ^ byte) * FNV_PRIME) & _MASK
        for byte in raw:
            h = ((h ^ byte) * FNV_PRIME) & _MASK
    return (seed & _MASK) ^ h


def words(key: int, start: int, count: int) -> np.ndarray:
    """uint64 words ``start .. start+count-1`` of the stream under ``key``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & _MASK) + idx * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
        return z ^ (z >> np.uint64(31))


def uniform01(key: int, start: int, count: int) -> np.ndarray:
    """float64 uniforms in [0, 1), one per stream word (53-bit mantissa)."""
    return (words(key, start, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def standard_normal(key: int, start: int, count: int) -> np.ndarray:
    """float64 standard normals via Box-Muller.

    Normal ``i`` is a pure function of stream words ``2*(i//2)`` and
    ``2*(i//2) + 1``, so any slice of the stream is reproducible in isolation.
    """
    if count <= 0:
        return np.zeros(0, dtype=np.float64)
    first_pair = start // 2
    last_pair = (start + count - 1) // 2
    n_pairs = last_pair - first_pair + 1
    w = words(key, 2 * first_pair, 2 * n_pairs)
    # u1 in (0, 1] so log never sees zero; u2 in [0, 1).
    u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    out = np.empty(2 * n_pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    offset = start - 2 * first_pair
    return out[offset : offset + count]


def permutation(key: int, n: int) -> np.ndarray:
    """Deterministic permutation of range(n): argsort of n stream uniforms."""
    return np.argsort(uniform01(key, 0, n), kind="stable")


class Stream:
    """Sequential view over a counter-based stream, for stepwise consumers."""

    def __init__(self, key: int):
        self.key = key & _MASK
        self._pos = 0

    def next_uniform(self) -> float:
        u = float(uniform01(self.key, self._pos, 1)[0])
        self._pos += 1
        return u

    def uniforms(self, count: int) -> np.ndarray:
        u = uniform01(self.key, self._pos, count)
        self._pos += count
        return u

    def choice_index(self, weights: np.ndarray) -> int:
        """Weighted index draw; uniform over all indices if weights sum to 0."""
        total = float(np.sum(weights))
        u = self.next_uniform()
        if total <= 0.0:
            return min(int(u * len(weights)), len(weights) - 1)
        cum = np.cumsum(weights)
        return int(np.searchsorted(cum, u * total, side="right").clip(0, len(weights) - 1))
