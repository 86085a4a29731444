"""Gaussian-kernel client graphs, normalized adjacency and eigengap summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .numerics import as_symmetric, sym_eigvals


@dataclass(frozen=True)
class SpectrumSummary:
    """Descending eigenvalues and their consecutive gaps.

    ``max_gap_pos`` is 1-based: a value of ``c`` means the largest drop sits
    between the c-th and (c+1)-th eigenvalue, i.e. ``c`` estimated clusters.
    """

    eigenvalues: np.ndarray
    gaps: np.ndarray
    max_gap: float
    max_gap_pos: int


def stack_updates(updates) -> np.ndarray:
    """Stack a list of update vectors (or a 2-D array) into a (K, d) float array."""
    if isinstance(updates, np.ndarray):
        arr = np.asarray(updates, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
    else:
        rows = [np.atleast_1d(np.asarray(u, dtype=float)).ravel() for u in updates]
        dims = {r.shape[0] for r in rows}
        if len(dims) > 1:
            raise ValueError(f"updates have mismatched dimensions {sorted(dims)}")
        arr = np.vstack(rows) if rows else np.empty((0, 0))
    if arr.ndim != 2:
        raise ValueError("updates must be a sequence of vectors")
    if not np.all(np.isfinite(arr)):
        raise ValueError("updates contain non-finite values")
    return arr


def pairwise_sq_dists(updates) -> np.ndarray:
    g = stack_updates(updates)
    return squareform(pdist(g, "sqeuclidean"))


def kernel_from_sq_dists(sq_dists: np.ndarray, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    a = np.exp(-sq_dists / (2.0 * sigma * sigma))
    np.fill_diagonal(a, 1.0)
    return a


def build_adjacency(updates, sigma: float) -> np.ndarray:
    """Gaussian-kernel similarity ``exp(-||g_i - g_j||^2 / (2 sigma^2))``."""
    g = stack_updates(updates)
    if g.shape[0] < 2:
        raise ValueError("need at least two updates to build a graph")
    return kernel_from_sq_dists(squareform(pdist(g, "sqeuclidean")), sigma)


def normalize_adjacency(a) -> np.ndarray:
    """Symmetric normalization ``D^{-1/2} A D^{-1/2}`` with ``D`` the row sums."""
    a = as_symmetric(a, "adjacency")
    deg = a.sum(axis=1)
    if np.any(deg <= 0):
        raise ArithmeticError("adjacency has a non-positive row sum")
    inv_sqrt = 1.0 / np.sqrt(deg)
    l = a * inv_sqrt[:, None] * inv_sqrt[None, :]
    return 0.5 * (l + l.T)


def summarize_eigenvalues(values) -> SpectrumSummary:
    values = np.sort(np.asarray(values, dtype=float))[::-1]
    if values.shape[0] < 2:
        raise ValueError("need at least two eigenvalues for an eigengap")
    gaps = values[:-1] - values[1:]
    pos = int(np.argmax(gaps))
    return SpectrumSummary(values, gaps, float(gaps[pos]), pos + 1)


def spectrum_summary(l, method: str = "lapack") -> SpectrumSummary:
    """Eigengap summary of a symmetric (normalized adjacency) matrix."""
    l = as_symmetric(l)
    if l.shape[0] < 2:
        raise ValueError("spectrum summary needs K >= 2")
    return summarize_eigenvalues(sym_eigvals(l, method))
