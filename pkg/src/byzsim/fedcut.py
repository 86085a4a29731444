"""FedCut: spectral-heuristic parameter selection and temporally averaged NCut.

One round of the defense:

1. ``pdsh`` sweeps a grid of Gaussian bandwidths, picks the one with the
   largest eigengap, and, when that eigengap sits beyond K/2, flags tight
   groups of identical-looking clients as mimic colluders.
2. ``cncut_round`` rebuilds the graph at the selected bandwidth, isolates the
   mimic set, folds the normalized adjacency into a running average over
   rounds, and clusters the rows of its top-c eigenvectors.
3. The largest cluster (minus mimic colluders) is the benign set; its mean is
   the aggregate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .numerics import kmeans_cluster, sym_eigen, sym_eigvals
from .spectral import (
    kernel_from_sq_dists,
    normalize_adjacency,
    pairwise_sq_dists,
    stack_updates,
    summarize_eigenvalues,
)

# a bandwidth is skipped when the graph is effectively edgeless (every
# off-diagonal weight below DEGENERATE_LOW) or effectively complete (every
# pair within COMPLETE_RADIUS bandwidths of each other). Without the second
# test the c = 1 gap, which tends to 1 as sigma grows, wins on most cohorts.
DEGENERATE_LOW = 1e-6
COMPLETE_RADIUS = 4.0
DEGENERATE_HIGH = float(np.exp(-COMPLETE_RADIUS ** 2 / 2))


def _is_degenerate(off_a: np.ndarray) -> bool:
    return bool(np.all(off_a < DEGENERATE_LOW) or np.all(off_a > DEGENERATE_HIGH))


def geometric_grid(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """``lo, lo*ratio, lo*ratio**2, ...`` up to and including ``hi`` (to rounding)."""
    if not (lo > 0 and hi >= lo and ratio > 1):
        raise ValueError(f"bad grid spec lo={lo} hi={hi} ratio={ratio}")
    n = int(np.floor(np.log(hi / lo) / np.log(ratio) + 1e-9)) + 1
    return lo * ratio ** np.arange(n)


DEFAULT_SIGMA_GRID = geometric_grid(1e-3, 1e2, 2.0)


@dataclass(frozen=True)
class SigmaProbe:
    sigma: float
    max_gap: float
    cluster_count: int
    degenerate: bool


@dataclass(frozen=True)
class PdshResult:
    cluster_count: int
    sigma_star: float
    mimic_set: frozenset
    global_cluster_count: int
    global_sigma: float
    probes: tuple = ()
    fallback: bool = False


@dataclass(frozen=True)
class SpectralState:
    l_avg: np.ndarray
    rounds_seen: int = 0

    @classmethod
    def initial(cls, k: int) -> "SpectralState":
        return cls(np.zeros((k, k)), 0)

    @property
    def order(self) -> int:
        return self.l_avg.shape[0]


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    benign_set: frozenset
    cluster_count: int
    sigma: float
    mimic_set: frozenset = frozenset()
    pdsh: PdshResult | None = field(default=None, repr=False)


def _check_grid(sigma_grid) -> np.ndarray:
    grid = np.asarray(sigma_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("sigma grid is empty")
    if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise ValueError("sigma grid values must be positive and finite")
    return grid


def spectral_embedding(l, c: int, method: str = "lapack") -> np.ndarray:
    """Top-``c`` eigenvectors of ``l`` as rows, each row scaled to unit length."""
    vecs = sym_eigen(l, method).vectors[:, :c]
    norms = np.linalg.norm(vecs, axis=1)
    out = np.zeros_like(vecs)
    nz = norms > 0
    out[nz] = vecs[nz] / norms[nz, None]
    return out


def canonical_labels(labels) -> np.ndarray:
    """Renumber cluster labels in order of first appearance."""
    labels = np.asarray(labels)
    mapping = {}
    for lab in labels:
        if lab not in mapping:
            mapping[lab] = len(mapping)
    return np.array([mapping[lab] for lab in labels], dtype=int)


def pdsh(updates, sigma_grid=DEFAULT_SIGMA_GRID, seed: int = 0, method: str = "lapack") -> PdshResult:
    """Choose bandwidth, cluster count and mimic colluders from eigengaps.

    Bandwidths that leave the graph effectively edgeless or effectively
    complete are skipped, unless every bandwidth is like that.
    """
    grid = _check_grid(sigma_grid)
    g = stack_updates(updates)
    k = g.shape[0]
    if k < 4:
        raise ValueError(f"PDSH needs at least 4 clients, got {k}")
    sq = pairwise_sq_dists(g)
    off = sq[~np.eye(k, dtype=bool)]

    probes = []
    for sigma in grid:
        off_a = np.exp(-off / (2.0 * sigma * sigma))
        degenerate = _is_degenerate(off_a)
        summary = summarize_eigenvalues(sym_eigvals(normalize_adjacency(kernel_from_sq_dists(sq, sigma)), method))
        probes.append(SigmaProbe(float(sigma), summary.max_gap, summary.max_gap_pos, degenerate))

    candidates = [p for p in probes if not p.degenerate] or probes
    best = max(candidates, key=lambda p: p.max_gap)  # first wins ties
    mimic: frozenset = frozenset()
    sigma_star, c = best.sigma, best.cluster_count
    fallback = False

    if best.cluster_count > k / 2:
        emb = spectral_embedding(normalize_adjacency(kernel_from_sq_dists(sq, best.sigma)), best.cluster_count, method)
        labels = kmeans_cluster(emb, best.cluster_count, seed=seed).assignment
        sizes = np.bincount(labels, minlength=best.cluster_count)
        mimic = frozenset(int(i) for i in np.flatnonzero(sizes[labels] > 1))
        # degenerate bandwidths come back only when nothing else qualifies
        restricted = ([p for p in candidates if p.cluster_count < k / 2]
                      or [p for p in probes if p.cluster_count < k / 2])
        if restricted:
            chosen = max(restricted, key=lambda p: p.max_gap)
            sigma_star, c = chosen.sigma, chosen.cluster_count
        else:
            fallback = True

    return PdshResult(c, sigma_star, mimic, best.cluster_count, best.sigma, tuple(probes), fallback)


def mask_mimic(a, mimic_set) -> np.ndarray:
    """Disconnect every client in ``mimic_set`` from all others (diagonal kept)."""
    a = np.array(a, dtype=float, copy=True)
    k = a.shape[0]
    idx = np.array(sorted(mimic_set), dtype=int)
    if idx.size == 0:
        return a
    if idx.min() < 0 or idx.max() >= k:
        raise ValueError(f"mimic indices {sorted(mimic_set)} out of range for K={k}")
    diag = a.diagonal().copy()
    a[idx, :] = 0.0
    a[:, idx] = 0.0
    a[np.arange(k), np.arange(k)] = diag
    return a


def ncut_cost(w, labels) -> float:
    """Normalized cut ``sum_k cut(B_k, rest) / vol(B_k)`` over non-empty clusters."""
    w = np.asarray(w, dtype=float)
    labels = np.asarray(labels)
    deg = w.sum(axis=1)
    total = 0.0
    for lab in np.unique(labels):
        inside = labels == lab
        vol = deg[inside].sum()
        if vol > 0:
            total += w[np.ix_(inside, ~inside)].sum() / vol
    return float(total)


def brute_force_min_ncut(w, c: int = 2):
    """Exhaustive minimum NCut over all partitions into ``c=2`` non-empty parts."""
    if c != 2:
        raise NotImplementedError("brute force is only implemented for c=2")
    k = np.asarray(w).shape[0]
    best_cost, best_labels = np.inf, None
    others = range(1, k)
    for size in range(0, k - 1):
        for subset in combinations(others, size):
            labels = np.ones(k, dtype=int)
            labels[0] = 0
            labels[list(subset)] = 0
            cost = ncut_cost(w, labels)
            if cost < best_cost:
                best_cost, best_labels = cost, labels
    return best_cost, best_labels


def _benign_from_clusters(labels: np.ndarray, mimic: frozenset) -> frozenset:
    sizes = np.bincount(labels)
    for lab in np.argsort(-sizes, kind="stable"):
        members = frozenset(int(i) for i in np.flatnonzero(labels == lab)) - mimic
        if members:
            return members
    rest = frozenset(range(labels.shape[0])) - mimic
    return rest or frozenset(range(labels.shape[0]))


def _remaining_cluster_count(l_avg: np.ndarray, mimic: frozenset, method: str) -> int:
    keep = np.array([i for i in range(l_avg.shape[0]) if i not in mimic], dtype=int)
    if keep.size < 2:
        return 1
    return summarize_eigenvalues(sym_eigvals(l_avg[np.ix_(keep, keep)], method)).max_gap_pos


def cncut_round(updates, state: SpectralState, sigma_grid=DEFAULT_SIGMA_GRID, seed: int = 0,
                method: str = "lapack"):
    """One FedCut round: returns ``(ClusterAssignment, new SpectralState)``."""
    g = stack_updates(updates)
    k = g.shape[0]
    if state.order != k:
        raise ValueError(f"state has order {state.order} but round has {k} clients")

    params = pdsh(g, sigma_grid, seed=seed, method=method)
    a = mask_mimic(kernel_from_sq_dists(pairwise_sq_dists(g), params.sigma_star), params.mimic_set)
    l = normalize_adjacency(a)
    t = state.rounds_seen + 1
    l_avg = ((t - 1) / t) * state.l_avg + (1.0 / t) * l
    new_state = SpectralState(l_avg, t)

    if params.fallback:
        labels = np.array([1 if i in params.mimic_set else 0 for i in range(k)])
        benign = frozenset(range(k)) - params.mimic_set
        return ClusterAssignment(labels, benign, params.cluster_count, params.sigma_star,
                                 params.mimic_set, params), new_state

    # each masked client is an isolated component with its own eigenvalue 1;
    # the rest is re-counted on its own block, since a masked group that PDSH
    # saw as a separate community no longer is one
    c = params.cluster_count
    if params.mimic_set:
        c = min(c, _remaining_cluster_count(l_avg, params.mimic_set, method)) + len(params.mimic_set)
    c = min(k, c)
    emb = spectral_embedding(l_avg, c, method)
    labels = canonical_labels(kmeans_cluster(emb, c, seed=seed).assignment)
    benign = _benign_from_clusters(labels, params.mimic_set)
    return ClusterAssignment(labels, benign, c, params.sigma_star, params.mimic_set, params), new_state


def fedcut_aggregate(updates, state: SpectralState, sigma_grid=DEFAULT_SIGMA_GRID, seed: int = 0,
                     method: str = "lapack"):
    """Mean of the benign set found by :func:`cncut_round`, plus the new state."""
    g = stack_updates(updates)
    assignment, new_state = cncut_round(g, state, sigma_grid, seed, method)
    idx = np.array(sorted(assignment.benign_set), dtype=int)
    return g[idx].mean(axis=0), new_state


class FedCut:
    """Stateful wrapper holding the running spectral state across rounds."""

    def __init__(self, num_clients: int, sigma_grid=DEFAULT_SIGMA_GRID, seed: int = 0, method: str = "lapack"):
        self.sigma_grid = _check_grid(sigma_grid)
        self.seed = seed
        self.method = method
        self.state = SpectralState.initial(num_clients)
        self.last_assignment: ClusterAssignment | None = None

    def __call__(self, updates) -> np.ndarray:
        g = stack_updates(updates)
        assignment, self.state = cncut_round(g, self.state, self.sigma_grid,
                                             self.seed + self.state.rounds_seen, self.method)
        self.last_assignment = assignment
        idx = np.array(sorted(assignment.benign_set), dtype=int)
        return g[idx].mean(axis=0)

    @property
    def benign_set(self):
        return None if self.last_assignment is None else self.last_assignment.benign_set
