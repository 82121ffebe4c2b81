"""k-means++ on normalized embeddings and the cluster summary rule."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import GraphInputError
from .graph import NodeWeights
from .spectral import Embedding


def normalize_rows(emb: Embedding | np.ndarray) -> np.ndarray:
    """Scale every row to unit Euclidean norm.

    Clustering the result with Euclidean k-means is clustering under the
    cosine distance of the original coordinates.
    """
    X = np.asarray(emb.coords if isinstance(emb, Embedding) else emb, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        name = emb.labels[zero[0]] if isinstance(emb, Embedding) else str(zero[0])
        raise ValueError(f"node {name!r} has a zero embedding vector and cannot be normalized")
    return X / norms[:, None]


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    assignment: np.ndarray
    centers: np.ndarray
    inertia: float
    restarts_used: int
    seed: int
    best_restart: int = 0
    n_iter: int = 0


def _sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    D = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(D, 0.0)


def kmeans_plusplus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2 seeding: each new center drawn with probability proportional to the
    squared distance to the nearest center chosen so far."""
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    closest = ((X - X[idx[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            raise ValueError("fewer distinct points than clusters")
        nxt = int(rng.choice(n, p=closest / total))
        idx.append(nxt)
        closest = np.minimum(closest, ((X - X[nxt]) ** 2).sum(1))
    return X[idx].copy()


@dataclass
class LloydResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    history: list
    n_iter: int


def lloyd(X: np.ndarray, centers: np.ndarray, max_iters: int = 300, tol: float = 1e-10) -> LloydResult:
    """Lloyd iterations from ``centers`` until no center moves more than ``tol``.

    ``history`` records the inertia after each assignment step. An empty
    cluster is re-seeded at the point farthest from its current center.
    """
    C = np.array(centers, dtype=float)
    k = C.shape[0]
    history = []
    it = 0
    while True:
        D = _sq_distances(X, C)
        labels = D.argmin(axis=1)
        dist = D[np.arange(X.shape[0]), labels]
        history.append(float(dist.sum()))
        if it >= max_iters:
            break
        it += 1
        counts = np.bincount(labels, minlength=k)
        new = np.zeros_like(C)
        np.add.at(new, labels, X)
        nonempty = counts > 0
        new[nonempty] /= counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            far = np.argsort(-dist, kind="stable")
            for c, p in zip(empty, far):
                new[c] = X[p]
        shift = np.sqrt(((new - C) ** 2).sum(1)).max()
        C = new
        if shift < tol and not empty.size:
            D = _sq_distances(X, C)
            labels = D.argmin(axis=1)
            history.append(float(D[np.arange(X.shape[0]), labels].sum()))
            break
    return LloydResult(C, labels, history[-1], history, it)


def _restart(X, k, max_iters, tol, seed, r):
    rng = np.random.default_rng([seed, r])
    return lloyd(X, kmeans_plusplus_init(X, k, rng), max_iters, tol)


def kmeans_pp(
    points: np.ndarray,
    k: int,
    restarts: int = 100,
    max_iters: int = 300,
    tol: float = 1e-10,
    seed: int = 0,
    threads: int = 1,
) -> ClusterModel:
    """Best-inertia k-means over ``restarts`` independent k-means++ seedings.

    Restart ``r`` draws from the generator stream ``(seed, r)``, so the
    result does not depend on ``threads``. Ties in inertia go to the lowest
    restart index.
    """
    X = np.asarray(points, dtype=float)
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    if k < 1:
        raise ValueError("k must be at least 1")
    distinct = np.unique(X, axis=0).shape[0]
    if k > distinct:
        raise ValueError(f"k={k} exceeds the number of distinct points ({distinct})")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(lambda r: _restart(X, k, max_iters, tol, seed, r), range(restarts)))
    else:
        runs = [_restart(X, k, max_iters, tol, seed, r) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (runs[r].inertia, r))
    run = runs[best]
    return ClusterModel(k, run.labels, run.centers, run.inertia, restarts, seed, best, run.n_iter)


@dataclass(frozen=True)
class ClusterInfo:
    cluster_id: int
    size: int
    weighted_size: float
    representatives: tuple[int, ...]


def summarize_clusters(
    model: ClusterModel,
    points: np.ndarray,
    d: NodeWeights,
    mass_weights: NodeWeights,
    fraction: float = 0.5,
    top_m: int = 5,
) -> list[ClusterInfo]:
    """Pick representatives: the highest-``d`` nodes among the ``fraction``
    of members closest to the cluster's ``mass_weights`` center of mass.

    The closest ``ceil(fraction * size)`` members are kept (distance ties by
    node index), then ranked by descending ``d`` with ties by node index.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    if top_m < 0:
        raise ValueError("top_m must be non-negative")
    X = np.asarray(points, dtype=float)
    if d.n != X.shape[0] or mass_weights.n != X.shape[0]:
        raise GraphInputError("weights do not match the number of points")
    out = []
    for c in range(model.k):
        members = np.flatnonzero(model.assignment == c)
        if members.size == 0:
            out.append(ClusterInfo(c, 0, 0.0, ()))
            continue
        m = mass_weights.values[members]
        center = m @ X[members] / m.sum()
        dist = ((X[members] - center) ** 2).sum(1)
        keep = math.ceil(round(fraction * members.size, 9))
        closest = members[np.lexsort((members, dist))[:keep]]
        ranked = closest[np.lexsort((closest, -d.values[closest]))]
        out.append(ClusterInfo(c, int(members.size), float(m.sum()), tuple(int(x) for x in ranked[:top_m])))
    return out


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index between two labelings of the same items."""
    a = np.unique(np.asarray(a), return_inverse=True)[1]
    b = np.unique(np.asarray(b), return_inverse=True)[1]
    n = a.size
    if n != b.size:
        raise ValueError("labelings differ in length")
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1)

    def pairs(x):
        return (x * (x - 1) / 2).sum()

    index = pairs(table)
    rows, cols = pairs(table.sum(1)), pairs(table.sum(0))
    expected = rows * cols / (n * (n - 1) / 2) if n > 1 else 0.0
    maximum = (rows + cols) / 2
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))
