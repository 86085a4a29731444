import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from byzsim.aggregators import (Aggregator, AggregatorSpec, coordinate_median, geometric_median,
                                geometric_median_objective, kmeans_defense, kmeans_split, krum, krum_scores,
                                make_aggregator, mean_aggregate, trimmed_mean)


def median_oracle(g):
    out = []
    for col in g.T:
        s = sorted(col)
        n = len(s)
        out.append(s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2)
    return np.array(out)


def trimmed_oracle(g, beta):
    k = g.shape[0]
    t = int(beta * k)
    return np.array([np.mean(sorted(col)[t:k - t]) for col in g.T])


def krum_oracle(g, q):
    k = g.shape[0]
    best, best_i = None, None
    for i in range(k):
        d = sorted(float(np.sum((g[i] - g[j]) ** 2)) for j in range(k) if j != i)
        score = sum(d[: k - q - 2])
        if best is None or score < best:
            best, best_i = score, i
    return best_i


def test_mean():
    assert np.allclose(mean_aggregate([[1, 2], [3, 4]]), [2, 3])


def test_median_examples():
    assert np.allclose(coordinate_median([[1.0], [5.0], [2.0]]), [2.0])
    assert np.allclose(coordinate_median([[1.0], [5.0], [2.0], [3.0]]), [2.5])


def test_trimmed_mean_examples():
    g = np.array([[0.0], [1.0], [2.0], [3.0], [100.0]])
    assert trimmed_mean(g, 0.2) == pytest.approx(2.0)
    assert trimmed_mean(g, 0.0) == pytest.approx(g.mean())
    with pytest.raises(ValueError):
        trimmed_mean(g, 0.5)


def test_krum_picks_cluster_member():
    g = np.array([[0.0], [0.1], [0.2], [0.15], [50.0], [-40.0]])
    assert krum(g, 2)[0] in (0.1, 0.15)
    with pytest.raises(ValueError):
        krum(g, 4)


def test_krum_tie_lowest_index():
    g = np.zeros((5, 2))
    assert np.array_equal(krum_scores(g, 1), np.zeros(5))
    spec = AggregatorSpec("krum", byzantine_count=1)
    agg = make_aggregator(spec, 5)
    agg(g)
    assert agg.benign_set == frozenset([0])


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10**9), k=st.integers(1, 12), d=st.integers(1, 5))
def test_median_and_trimmed_oracles(seed, k, d):
    g = np.random.default_rng(seed).normal(size=(k, d))
    assert np.max(np.abs(coordinate_median(g) - median_oracle(g))) <= 1e-12
    beta = np.random.default_rng(seed + 1).uniform(0, 0.49)
    if 2 * int(beta * k) < k:
        assert np.max(np.abs(trimmed_mean(g, beta) - trimmed_oracle(g, beta))) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10**9), k=st.integers(3, 12), d=st.integers(1, 5))
def test_krum_oracle(seed, k, d):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(k, d))
    q = int(rng.integers(0, k - 2))
    assert np.array_equal(krum(g, q), g[krum_oracle(g, q)])


def test_geometric_median_collinear_and_symmetric():
    assert geometric_median([[0.0], [1.0], [10.0]])[0] == pytest.approx(1.0, abs=1e-9)
    sq = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    assert np.allclose(geometric_median(sq), [0, 0], atol=1e-7)


def test_geometric_median_at_data_point():
    # a heavy point: the median sits on the repeated point
    g = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.3]])
    assert np.allclose(geometric_median(g), [0, 0], atol=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_geometric_median_beats_perturbations(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(9, 3))
    y = geometric_median(g)
    f = geometric_median_objective(y, g)
    for _ in range(50):
        assert f <= geometric_median_objective(y + 1e-3 * rng.normal(size=3), g) + 1e-9


def test_kmeans_defense_split():
    g = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    assert list(kmeans_split(g)) == [0, 1, 2]
    assert kmeans_defense(g)[0] == pytest.approx(0.1)
    # equal halves: smaller index sum wins
    assert list(kmeans_split(np.array([[9.0], [9.1], [0.0], [0.1]]))) == [0, 1]


def test_spec_validation():
    with pytest.raises(ValueError):
        AggregatorSpec("average")
    with pytest.raises(ValueError):
        AggregatorSpec("trimmed_mean")
    with pytest.raises(ValueError):
        AggregatorSpec("krum")
    with pytest.raises(ValueError):
        Aggregator(AggregatorSpec("krum", byzantine_count=4), 6)


@pytest.mark.parametrize("kind", ["mean", "coordinate_median", "trimmed_mean", "krum", "geometric_median",
                                  "kmeans_defense", "fedcut"])
def test_factory_all_kinds(kind):
    g = np.random.default_rng(0).normal(size=(10, 3))
    agg = make_aggregator(AggregatorSpec(kind, trim_fraction=0.1, byzantine_count=2), 10)
    out = agg(g)
    assert out.shape == (3,) and np.all(np.isfinite(out))
    assert agg.benign_set and agg.benign_set <= frozenset(range(10))


def test_empty_updates_rejected():
    with pytest.raises(ValueError):
        mean_aggregate(np.empty((0, 3)))
