"""Baseline robust aggregation rules and a small factory over all defenses."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fedcut import DEFAULT_SIGMA_GRID, FedCut
from .numerics import kmeans_cluster
from .spectral import pairwise_sq_dists, stack_updates

AGGREGATOR_KINDS = ("mean", "coordinate_median", "trimmed_mean", "krum", "geometric_median",
                    "kmeans_defense", "fedcut")


def _stack_nonempty(updates) -> np.ndarray:
    g = stack_updates(updates)
    if g.shape[0] == 0:
        raise ValueError("cannot aggregate an empty set of updates")
    return g


def mean_aggregate(updates) -> np.ndarray:
    return _stack_nonempty(updates).mean(axis=0)


def coordinate_median(updates) -> np.ndarray:
    return np.median(_stack_nonempty(updates), axis=0)


def trimmed_mean(updates, beta: float) -> np.ndarray:
    """Per coordinate, drop the floor(beta*K) smallest and largest values and average the rest."""
    g = _stack_nonempty(updates)
    k = g.shape[0]
    if not 0 <= beta < 0.5:
        raise ValueError(f"trim fraction must be in [0, 0.5), got {beta}")
    trim = int(np.floor(beta * k))
    if 2 * trim >= k:
        raise ValueError(f"trimming {trim} per side leaves nothing of K={k}")
    s = np.sort(g, axis=0)
    return s[trim:k - trim].mean(axis=0)


def krum_scores(updates, q: int) -> np.ndarray:
    g = _stack_nonempty(updates)
    k = g.shape[0]
    if k < q + 3:
        raise ValueError(f"Krum needs K >= q + 3 (K={k}, q={q})")
    d2 = pairwise_sq_dists(g)
    m = k - q - 2
    scores = np.empty(k)
    for i in range(k):
        others = np.delete(d2[i], i)
        scores[i] = np.sort(others)[:m].sum()
    return scores


def krum_index(updates, q: int) -> int:
    return int(np.argmin(krum_scores(updates, q)))


def krum(updates, q: int) -> np.ndarray:
    """The single update closest (in summed squared distance) to its K-q-2 nearest neighbours."""
    g = _stack_nonempty(updates)
    return g[krum_index(g, q)].copy()


def geometric_median_objective(y, points) -> float:
    return float(np.linalg.norm(np.asarray(points) - y, axis=1).sum())


def geometric_median(updates, tol: float = 1e-7, max_iter: int = 1000) -> np.ndarray:
    """Weiszfeld iteration with the Vardi-Zhang correction at data points.

    Points within 1e-12 of the current iterate are left out of the weighted
    average for that step. The returned point is the best (by summed
    distance) of the final iterate and the input points.
    """
    g = _stack_nonempty(updates)
    y = g.mean(axis=0)
    for _ in range(max_iter):
        diff = g - y
        dist = np.linalg.norm(diff, axis=1)
        near = dist <= 1e-12
        far = ~near
        if not far.any():
            break
        inv = 1.0 / dist[far]
        pull = (diff[far] * inv[:, None]).sum(axis=0)
        r = np.linalg.norm(pull)
        eta = int(near.sum())
        if max(r - eta, 0.0) <= tol:
            break
        target = (g[far] * inv[:, None]).sum(axis=0) / inv.sum()
        if eta:
            beta = min(1.0, eta / r)
            y_new = (1.0 - beta) * target + beta * y
        else:
            y_new = target
        if np.array_equal(y_new, y):
            break
        y = y_new

    candidates = np.vstack([y[None, :], g])
    objectives = [geometric_median_objective(c, g) for c in candidates]
    return candidates[int(np.argmin(objectives))].copy()


def kmeans_split(updates, seed: int = 0) -> np.ndarray:
    """Indices of the larger of two k-means clusters on the raw updates."""
    g = _stack_nonempty(updates)
    k = g.shape[0]
    if k < 2:
        raise ValueError("kmeans defense needs at least two updates")
    labels = kmeans_cluster(g, 2, seed=seed).assignment
    members = [np.flatnonzero(labels == j) for j in (0, 1)]
    # larger cluster; on equal size the one with smaller index sum
    members.sort(key=lambda m: (-m.size, m.sum()))
    return members[0]


def kmeans_defense(updates, seed: int = 0) -> np.ndarray:
    g = _stack_nonempty(updates)
    return g[kmeans_split(g, seed)].mean(axis=0)


@dataclass(frozen=True)
class AggregatorSpec:
    kind: str = "mean"
    trim_fraction: float | None = None
    byzantine_count: int | None = None
    tol: float = 1e-7
    max_iter: int = 1000
    sigma_grid: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in AGGREGATOR_KINDS:
            raise ValueError(f"unknown defense {self.kind!r}")
        if self.kind == "trimmed_mean" and (self.trim_fraction is None or not 0 <= self.trim_fraction < 0.5):
            raise ValueError(f"trimmed_mean needs trim_fraction in [0, 0.5), got {self.trim_fraction}")
        if self.kind == "krum" and (self.byzantine_count is None or self.byzantine_count < 0):
            raise ValueError(f"krum needs a byzantine_count >= 0, got {self.byzantine_count}")


class Aggregator:
    """Callable aggregator; ``benign_set`` holds the clients used in the last call.

    For rules that do not select clients (mean, median, ...) every client
    counts as accepted.
    """

    def __init__(self, spec: AggregatorSpec, num_clients: int):
        self.spec = spec
        self.num_clients = num_clients
        self.benign_set: frozenset | None = None
        self._rounds = 0
        self._fedcut = None
        if spec.kind == "krum" and num_clients < spec.byzantine_count + 3:
            raise ValueError(f"Krum needs K >= q + 3 (K={num_clients}, q={spec.byzantine_count})")
        if spec.kind == "fedcut":
            grid = DEFAULT_SIGMA_GRID if spec.sigma_grid is None else spec.sigma_grid
            self._fedcut = FedCut(num_clients, grid, seed=spec.seed)

    def __call__(self, updates) -> np.ndarray:
        g = _stack_nonempty(updates)
        spec = self.spec
        everyone = frozenset(range(g.shape[0]))
        seed = spec.seed + self._rounds
        self._rounds += 1
        if spec.kind == "fedcut":
            out = self._fedcut(g)
            self.benign_set = self._fedcut.benign_set
            return out
        if spec.kind == "krum":
            idx = krum_index(g, spec.byzantine_count)
            self.benign_set = frozenset([idx])
            return g[idx].copy()
        if spec.kind == "kmeans_defense":
            idx = kmeans_split(g, seed)
            self.benign_set = frozenset(int(i) for i in idx)
            return g[idx].mean(axis=0)
        self.benign_set = everyone
        if spec.kind == "mean":
            return mean_aggregate(g)
        if spec.kind == "coordinate_median":
            return coordinate_median(g)
        if spec.kind == "trimmed_mean":
            return trimmed_mean(g, spec.trim_fraction)
        return geometric_median(g, spec.tol, spec.max_iter)


def make_aggregator(spec: AggregatorSpec, num_clients: int) -> Aggregator:
    return Aggregator(spec, num_clients)
