import struct

import numpy as np
import pytest

from byzsim.fl_sim.data import (Dataset, IdxFormatError, dirichlet_partition, iid_partition, load_idx, load_mnist,
                                parse_idx, synth_dataset)


def idx_bytes(dims, payload, magic=None):
    ndim = len(dims)
    head = struct.pack(">HBB", 0, 0x08, ndim) if magic is None else struct.pack(">I", magic)
    return head + struct.pack(f">{ndim}I", *dims) + bytes(payload)


def test_parse_1d_hand_bytes():
    data = bytes([0, 0, 8, 1, 0, 0, 0, 4, 1, 2, 3, 4])
    assert len(data) == 12
    out = parse_idx(data)
    assert out.dtype == np.uint8 and list(out) == [1, 2, 3, 4]


def test_parse_3d():
    out = parse_idx(idx_bytes((2, 2, 3), range(12)))
    assert out.shape == (2, 2, 3) and out[1, 1, 2] == 11


def test_parse_truncated():
    with pytest.raises(IdxFormatError) as err:
        parse_idx(bytes([0, 0, 8, 1, 0, 0, 0, 4, 1, 2, 3]))
    assert "expected 4" in str(err.value) and "got 3" in str(err.value)
    assert err.value.offset == 8


def test_parse_bad_magic():
    with pytest.raises(IdxFormatError) as err:
        parse_idx(bytes.fromhex("00000999") + bytes(8))
    assert "00000999" in str(err.value) and err.value.offset == 0
    with pytest.raises(IdxFormatError):
        parse_idx(b"\x00\x00")
    with pytest.raises(IdxFormatError):
        parse_idx(bytes([0, 0, 8, 3, 0, 0]))


def test_load_mnist_roundtrip(tmp_path):
    images = tmp_path / "img"
    labels = tmp_path / "lab"
    images.write_bytes(idx_bytes((3, 2, 2), [0, 255, 0, 255] * 3))
    labels.write_bytes(idx_bytes((3,), [1, 7, 9]))
    assert load_idx(labels).tolist() == [1, 7, 9]
    ds = load_mnist(images, labels)
    assert ds.features.shape == (3, 4) and ds.features.max() == 1.0
    assert ds.labels.tolist() == [1, 7, 9] and ds.num_classes == 10
    labels.write_bytes(idx_bytes((2,), [1, 7]))
    with pytest.raises(ValueError):
        load_mnist(images, labels)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int), 2)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([0, 2]), 2)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([0]), 2)


def test_synth_linearly_separable():
    ds = synth_dataset(0, 500, 2, 2, 10.0)
    x = np.hstack([ds.features, np.ones((500, 1))])
    w, *_ = np.linalg.lstsq(x, 2.0 * ds.labels - 1, rcond=None)
    assert np.mean((x @ w > 0) == (ds.labels == 1)) >= 0.99


@pytest.mark.parametrize("d,c", [(20, 10), (2, 5)])
def test_synth_centres_separated(d, c):
    rng = np.random.default_rng(0)
    from byzsim.fl_sim.data import _class_centers
    centers = _class_centers(rng, d, c, 8.0)
    gaps = [np.linalg.norm(centers[i] - centers[j]) for i in range(c) for j in range(i + 1, c)]
    assert min(gaps) >= 8.0 - 1e-9


def test_synth_deterministic_and_balanced():
    a, b = synth_dataset(4, 1003, 5, 10, 8.0), synth_dataset(4, 1003, 5, 10, 8.0)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    counts = np.bincount(a.labels, minlength=10)
    assert np.all(np.abs(counts - 1003 / 10) <= 10)
    with pytest.raises(ValueError):
        synth_dataset(0, 3, 2, 5, 1.0)


def test_synth_offset_translates():
    a, b = synth_dataset(1, 50, 3, 2, 5.0), synth_dataset(1, 50, 3, 2, 5.0, offset=2.0)
    assert np.allclose(b.features - a.features, 2.0)


def _check_exact_partition(parts, n):
    allidx = np.concatenate(parts)
    assert np.array_equal(np.sort(allidx), np.arange(n))


def test_iid_partition():
    parts = iid_partition(103, 10, 0)
    _check_exact_partition(parts, 103)
    assert {len(p) for p in parts} <= {10, 11}


def test_dirichlet_exact_and_deterministic():
    labels = np.random.default_rng(0).integers(0, 10, size=2000)
    parts = dirichlet_partition(labels, 20, 0.5, seed=3)
    _check_exact_partition(parts, 2000)
    again = dirichlet_partition(labels, 20, 0.5, seed=3)
    assert all(np.array_equal(p, q) for p, q in zip(parts, again))


def test_dirichlet_large_beta_is_near_global():
    labels = np.arange(20000) % 10
    parts = dirichlet_partition(labels, 10, 1e4, seed=0)
    global_hist = np.bincount(labels, minlength=10) / labels.size
    for p in parts:
        hist = np.bincount(labels[p], minlength=10) / len(p)
        assert np.all(np.abs(hist - global_hist) <= 0.1 * global_hist)


def test_dirichlet_small_beta_is_skewed():
    labels = np.arange(5000) % 10
    parts = dirichlet_partition(labels, 20, 0.1, seed=0)
    shares = []
    for p in parts:
        if len(p):
            hist = np.sort(np.bincount(labels[p], minlength=10))[::-1]
            shares.append(hist[:2].sum() / len(p))
    assert max(shares) >= 0.8


def test_dirichlet_min_size_and_errors():
    labels = np.arange(300) % 3
    parts = dirichlet_partition(labels, 10, 1.0, seed=1, min_size=5)
    assert min(len(p) for p in parts) >= 5
    # impossible request: the last draw comes back, still an exact partition
    parts = dirichlet_partition(labels, 10, 1.0, seed=1, min_size=100, max_tries=3)
    _check_exact_partition(parts, 300)
    with pytest.raises(ValueError):
        dirichlet_partition(labels, 10, 0.0, seed=1)
    with pytest.raises(ValueError):
        dirichlet_partition(labels, 0, 1.0, seed=1)
