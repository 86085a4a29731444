import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from byzsim.spectral import (build_adjacency, normalize_adjacency, pairwise_sq_dists, spectrum_summary,
                             stack_updates, summarize_eigenvalues)
from byzsim.numerics import sym_eigvals


def test_identical_updates_give_all_ones():
    a = build_adjacency(np.ones((4, 3)), 0.5)
    assert np.array_equal(a, np.ones((4, 4)))


def test_diagonal_exactly_one(rng):
    a = build_adjacency(rng.normal(size=(6, 4)) * 100, 0.01)
    assert np.array_equal(np.diag(a), np.ones(6))
    assert np.array_equal(a, a.T)
    off = a[~np.eye(6, dtype=bool)]
    assert np.all(off >= 0) and np.all(off <= 1)


def test_kernel_hand_value():
    sigma = 0.7
    a = build_adjacency(np.array([[0.0], [np.sqrt(2) * sigma]]), sigma)
    assert a[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-14)
    assert a[0, 1] == pytest.approx(0.3678794, abs=1e-7)


def test_adjacency_errors():
    with pytest.raises(ValueError):
        build_adjacency([np.zeros(2), np.zeros(3)], 1.0)
    with pytest.raises(ValueError):
        build_adjacency(np.zeros((3, 2)), 0.0)
    with pytest.raises(ValueError):
        build_adjacency(np.zeros((1, 2)), 1.0)
    with pytest.raises(ValueError):
        stack_updates(np.array([[np.inf, 0.0]]))


def test_normalize_all_ones():
    l = normalize_adjacency(np.ones((5, 5)))
    assert np.allclose(l, 0.2)
    assert sym_eigvals(l)[0] == pytest.approx(1.0, abs=1e-12)


def test_normalize_two_blocks_has_double_one():
    a = np.zeros((5, 5))
    a[:2, :2] = 1
    a[2:, 2:] = 1
    vals = sym_eigvals(normalize_adjacency(a))
    assert np.allclose(vals[:2], 1.0, atol=1e-12)
    assert vals[2] < 1 - 1e-6


def test_normalize_rejects_zero_row():
    with pytest.raises(ArithmeticError):
        normalize_adjacency(np.zeros((3, 3)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(2, 12), sigma=st.floats(1e-2, 1e2))
def test_normalized_spectrum_bounds(seed, k, sigma):
    g = np.random.default_rng(seed).normal(size=(k, 3))
    l = normalize_adjacency(build_adjacency(g, sigma))
    assert np.array_equal(l, l.T) and np.all(l >= 0)
    vals = sym_eigvals(l)
    assert vals[-1] >= -1 - 1e-9 and vals[0] <= 1 + 1e-9
    if np.all(build_adjacency(g, sigma) > 0):
        assert vals[0] == pytest.approx(1.0, abs=1e-9)


def test_gap_example():
    s = summarize_eigenvalues([1, 1, 0.2, 0.1])
    assert np.allclose(s.gaps, [0, 0.8, 0.1])
    assert s.max_gap_pos == 2 and s.max_gap == pytest.approx(0.8)


def test_gap_ties_go_to_smallest_index():
    s = summarize_eigenvalues([0.5] * 4)
    assert np.array_equal(s.gaps, np.zeros(3)) and s.max_gap_pos == 1
    s = summarize_eigenvalues([1.0, 0.5, 0.0])
    assert s.max_gap_pos == 1


def test_spectrum_summary_needs_two():
    with pytest.raises(ValueError):
        spectrum_summary(np.eye(1))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(2, 10), scale=st.floats(0.1, 10), sigma=st.floats(0.1, 10))
def test_scaling_equivalence(seed, k, scale, sigma):
    g = np.random.default_rng(seed).normal(size=(k, 2))
    assert np.allclose(build_adjacency(scale * g, sigma * scale), build_adjacency(g, sigma), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(2, 10))
def test_permutation_equivariance(seed, k):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(k, 3))
    perm = rng.permutation(k)
    a, ap = build_adjacency(g, 1.0), build_adjacency(g[perm], 1.0)
    assert np.allclose(ap, a[np.ix_(perm, perm)], atol=1e-15)
    l, lp = normalize_adjacency(a), normalize_adjacency(ap)
    assert np.allclose(lp, l[np.ix_(perm, perm)], atol=1e-14)
    s, sp = spectrum_summary(l), spectrum_summary(lp)
    assert np.allclose(s.eigenvalues, sp.eigenvalues, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.integers(2, 15))
def test_summary_invariants(seed, k):
    g = np.random.default_rng(seed).normal(size=(k, 2))
    s = spectrum_summary(normalize_adjacency(build_adjacency(g, 0.5)))
    assert np.all(s.gaps >= 0)
    assert s.max_gap == s.gaps.max()
    assert s.max_gap_pos == int(np.flatnonzero(s.gaps == s.max_gap)[0]) + 1
    assert 1 <= s.max_gap_pos <= k - 1


def test_pairwise_sq_dists_matches_loop(rng):
    g = rng.normal(size=(5, 3))
    d = pairwise_sq_dists(g)
    for i in range(5):
        for j in range(5):
            assert d[i, j] == pytest.approx(np.sum((g[i] - g[j]) ** 2), abs=1e-12)
