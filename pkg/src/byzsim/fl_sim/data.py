"""Datasets for the federated simulator: synthetic Gaussian classes, IDX files, partitions."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX_UBYTE = 0x08


class IdxFormatError(ValueError):
    """Malformed or unsupported IDX payload; ``offset`` is the byte position at fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ValueError("features must be a non-empty (n, d) matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per row of features")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return self.features.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)


def _class_centers(rng: np.random.Generator, d: int, c: int, separation: float) -> np.ndarray:
    if d >= c:
        # scaled orthonormal frame: every pair exactly `separation` apart
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        return (separation / np.sqrt(2.0)) * q[:, :c].T
    centers = rng.normal(size=(c, d))
    gaps = [np.linalg.norm(centers[i] - centers[j]) for i in range(c) for j in range(i + 1, c)]
    return centers * (separation / min(gaps))


def synth_dataset(seed: int, n: int, d: int, num_classes: int, class_separation: float,
                  noise: float = 1.0, offset: float = 0.0) -> Dataset:
    """Isotropic Gaussian blobs, one per class, with near-equal class counts.

    ``offset`` is added to every coordinate; a positive value moves the data
    towards the positive orthant, like pixel intensities.
    """
    if n < num_classes:
        raise ValueError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    centers = _class_centers(rng, d, num_classes, class_separation)
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    features = centers[labels] + noise * rng.normal(size=(n, d)) + offset
    return Dataset(features, labels.astype(int), num_classes)


def parse_idx(data: bytes) -> np.ndarray:
    """Decode an unsigned-byte IDX blob (the MNIST file format) into an array."""
    if len(data) < 4:
        raise IdxFormatError(f"header needs 4 bytes, got {len(data)}", len(data))
    zero, dtype, ndim = struct.unpack(">HBB", data[:4])
    if zero != 0 or dtype != IDX_UBYTE or ndim not in (1, 2, 3):
        raise IdxFormatError(f"unsupported IDX magic 0x{int.from_bytes(data[:4], 'big'):08x}", 0)
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise IdxFormatError(f"dimension header needs {header_len} bytes, got {len(data)}", len(data))
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    expected = int(np.prod(dims, dtype=np.int64))
    actual = len(data) - header_len
    if actual != expected:
        raise IdxFormatError(f"payload length mismatch: expected {expected} bytes, got {actual}", header_len)
    return np.frombuffer(data, dtype=np.uint8, offset=header_len).reshape(dims)


def load_idx(path) -> np.ndarray:
    return parse_idx(Path(path).read_bytes())


def load_mnist(images_path, labels_path) -> Dataset:
    """Flattened, [0, 1]-scaled MNIST-family images with their labels."""
    images = load_idx(images_path)
    labels = load_idx(labels_path)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ValueError("image/label files do not match")
    x = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return Dataset(x, labels.astype(int), 10)


def iid_partition(n: int, num_clients: int, seed: int) -> list:
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, num_clients)]


def dirichlet_partition(labels, num_clients: int, beta: float, seed: int, min_size: int = 0,
                        max_tries: int = 100) -> list:
    """Split sample indices across clients with per-class Dir(beta) proportions.

    With ``min_size > 0`` the draw is repeated (same seed stream) until every
    client holds at least that many samples; after ``max_tries`` the last draw
    is returned as is.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if num_clients < 1:
        raise ValueError("need at least one client")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        parts = [[] for _ in range(num_clients)]
        for cls in np.unique(labels):
            idx = np.flatnonzero(labels == cls)
            rng.shuffle(idx)
            props = rng.dirichlet(np.full(num_clients, beta))
            cuts = (np.cumsum(props)[:-1] * idx.size).astype(int)
            for client, chunk in enumerate(np.split(idx, cuts)):
                parts[client].extend(chunk.tolist())
        if min(len(p) for p in parts) >= min_size:
            break
    return [np.sort(np.array(p, dtype=int)) for p in parts]
