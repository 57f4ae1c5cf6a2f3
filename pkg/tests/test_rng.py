"""Counter-based RNG: stream determinism and distribution sanity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idrank import rng


def test_fnv1a64_known_vectors():
    # Reference values for the 64-bit FNV-1a parameters.
    assert rng.fnv1a64(b"") == 0xCBF29CE484222325
    assert rng.fnv1a64("a") == 0xAF63DC4C8601EC8C
    assert rng.fnv1a64("foobar") == 0x85944171F73967E8


def test_derive_key_separates_labels():
    assert rng.derive_key(1, "ab", "c") != rng.derive_key(1, "a", "bc")
    assert rng.derive_key(1, "x") != rng.derive_key(2, "x")
    assert rng.derive_key(7, "x") == rng.derive_key(7, "x")


def test_words_are_pure_functions_of_position():
    key = rng.derive_key(42, "stream")
    all_at_once = rng.words(key, 0, 100)
    pieces = np.concatenate([rng.words(key, i, 1) for i in range(100)])
    assert np.array_equal(all_at_once, pieces)


def test_uniform01_range_and_determinism():
    u = rng.uniform01(rng.derive_key(3, "u"), 0, 10_000)
    assert np.all(u >= 0.0) and np.all(u < 1.0)
    assert np.array_equal(u, rng.uniform01(rng.derive_key(3, "u"), 0, 10_000))
    # crude uniformity check
    assert abs(float(np.mean(u)) - 0.5) < 0.02


def test_standard_normal_slices_match_full_stream():
    key = rng.derive_key(9, "g")
    full = rng.standard_normal(key, 0, 64)
    for start, count in [(0, 64), (1, 10), (3, 5), (63, 1), (10, 0)]:
        part = rng.standard_normal(key, start, count)
        assert np.array_equal(part, full[start : start + count])


def test_standard_normal_moments():
    g = rng.standard_normal(rng.derive_key(5, "g"), 0, 100_000)
    assert abs(float(np.mean(g))) < 0.02
    assert abs(float(np.std(g)) - 1.0) < 0.02
    assert np.all(np.isfinite(g))


def test_permutation_is_a_permutation():
    p = rng.permutation(rng.derive_key(1, "p"), 257)
    assert sorted(p.tolist()) == list(range(257))
    assert np.array_equal(p, rng.permutation(rng.derive_key(1, "p"), 257))


@given(st.integers(0, 2**64 - 1), st.integers(1, 64))
@settings(max_examples=100)
def test_permutation_property(key, n):
    p = rng.permutation(key, n)
    assert sorted(p.tolist()) == list(range(n))


def test_stream_choice_index_weighted():
    s = rng.Stream(rng.derive_key(0, "w"))
    weights = np.array([0.0, 0.0, 1.0])
    for _ in range(20):
        assert s.choice_index(weights) == 2


def test_stream_choice_index_uniform_fallback():
    s = rng.Stream(rng.derive_key(0, "z"))
    counts = [0, 0, 0]
    for _ in range(300):
        counts[s.choice_index(np.zeros(3))] += 1
    assert all(c > 50 for c in counts)


@given(st.integers(0, 2**63), st.integers(0, 1000), st.integers(1, 100))
@settings(max_examples=50)
def test_words_determinism_property(key, start, count):
    a = rng.words(key, start, count)
    b = rng.words(key, start, count)
    assert np.array_equal(a, b)
    assert a.dtype == np.uint64
