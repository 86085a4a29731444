"""Dense symmetric eigendecomposition and k-means clustering.

Two eigen backends are available: a round-robin (parallel ordering) cyclic
Jacobi solver written against numpy, and LAPACK's ``syevd`` through
:func:`numpy.linalg.eigh`. Both return eigenvalues in descending order with
matching eigenvector columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigenPair:
    values: np.ndarray  # (K,), descending
    vectors: np.ndarray  # (K, K), column k pairs with values[k]


@dataclass(frozen=True)
class KmeansResult:
    assignment: np.ndarray  # (n,) ints in [0, c)
    centroids: np.ndarray  # (c, dim)
    cost: float
    n_iter: int = 0


def as_symmetric(m, name="matrix") -> np.ndarray:
    """Validate ``m`` as a finite square symmetric matrix and return it as float64."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    if not np.array_equal(m, m.T):
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > 1e-12 * scale:
            raise ValueError(f"{name} is not symmetric")
        m = 0.5 * (m + m.T)
    return m


def _round_robin(n: int):
    """Yield n-1 rounds of disjoint index pairs covering all pairs once (n even)."""
    idx = list(range(n))
    for _ in range(n - 1):
        half = n // 2
        yield np.array(idx[:half]), np.array(idx[half:][::-1])
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]


def jacobi_eigh(m, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenPair:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Each sweep visits every off-diagonal pair once, grouped into rounds of
    disjoint pairs so that a whole round is applied with vectorized row and
    column updates. Iteration stops when the off-diagonal Frobenius norm
    drops to ``tol * ||m||_F`` or after ``max_sweeps`` sweeps.
    """
    a = as_symmetric(m).copy()
    k = a.shape[0]
    v = np.eye(k)
    if k == 1:
        return EigenPair(a.diagonal().copy(), v)

    n = k + (k % 2)
    if n != k:
        # dummy row/column, decoupled from everything else
        a = np.pad(a, ((0, 1), (0, 1)))
        v = np.eye(n)
    threshold = tol * np.linalg.norm(a)
    rounds = list(_round_robin(n))

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            cols_p, cols_q = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * cols_p - s * cols_q
            a[:, q] = s * cols_p + c * cols_q
            rows_p, rows_q = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            a[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq

    values = np.diag(a)[:k].copy()
    vectors = v[:k, :k]
    order = np.argsort(-values, kind="stable")
    return EigenPair(values[order], np.ascontiguousarray(vectors[:, order]))


def sym_eigen(m, method: str = "lapack") -> EigenPair:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``method`` is ``"lapack"`` (default, fast) or ``"jacobi"``.
    """
    m = as_symmetric(m)
    if method == "jacobi":
        return jacobi_eigh(m)
    if method != "lapack":
        raise ValueError(f"unknown eigen method {method!r}")
    values, vectors = np.linalg.eigh(m)
    return EigenPair(values[::-1].copy(), np.ascontiguousarray(vectors[:, ::-1]))


def sym_eigvals(m, method: str = "lapack") -> np.ndarray:
    """Descending eigenvalues only."""
    m = as_symmetric(m)
    if method == "jacobi":
        return jacobi_eigh(m).values
    return np.linalg.eigvalsh(m)[::-1].copy()


# ---------------------------------------------------------------- k-means


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ncd,ncd->nc", diff, diff)


def _kmeanspp(points: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, c):
        total = closest.sum()
        if total > 0.0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centers.append(points[idx])
        closest = np.minimum(closest, np.sum((points - points[idx]) ** 2, axis=1))
    return np.array(centers, dtype=float)


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = 300):
    """Run Lloyd iterations from ``centers``.

    Returns ``(assignment, centers, cost_trace)`` where ``cost_trace[i]`` is the
    assignment cost after the i-th assignment step. Empty clusters keep their
    previous centroid.
    """
    centers = np.array(centers, dtype=float, copy=True)
    assignment = None
    trace = []
    for _ in range(max_iter):
        d2 = _sq_dists(points, centers)
        new = np.argmin(d2, axis=1)
        trace.append(float(d2[np.arange(len(points)), new].sum()))
        if assignment is not None and np.array_equal(new, assignment):
            break
        assignment = new
        for j in range(centers.shape[0]):
            members = assignment == j
            if members.any():
                centers[j] = points[members].mean(axis=0)
    return assignment, centers, trace


def kmeans_cost(points, assignment, centroids) -> float:
    points = np.asarray(points, dtype=float)
    diff = points - np.asarray(centroids)[assignment]
    return float(np.sum(diff * diff))


def kmeans_cluster(points, c: int, seed: int = 0, restarts: int = 10, max_iter: int = 300) -> KmeansResult:
    """Best-of-``restarts`` k-means++ / Lloyd clustering of the rows of ``points``."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"cluster count c={c} must satisfy 1 <= c <= n={n}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if not np.all(np.isfinite(points)):
        raise ValueError("points have non-finite entries")

    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        init = _kmeanspp(points, c, rng)
        assignment, centers, trace = lloyd(points, init, max_iter)
        cost = kmeans_cost(points, assignment, centers)
        if best is None or cost < best.cost:
            best = KmeansResult(assignment, centers, cost, len(trace))
    return best
