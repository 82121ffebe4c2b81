"""Independent reference computations used only by the tests.

Nothing here imports the package's linear-algebra paths: each oracle works
from the dense adjacency with textbook formulas.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np
import scipy.sparse as sp

from wsembed.graph import Graph


def dense(g: Graph) -> np.ndarray:
    return g.adjacency.toarray()


def row_sums_loop(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    out = np.zeros(n)
    for i in range(n):
        for j in range(n):
            out[i] += A[i, j]
    return out


def laplacian_dense(A: np.ndarray) -> np.ndarray:
    return np.diag(A.sum(1)) - A


def pinv(A: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of the Laplacian via numpy's SVD routine."""
    return np.linalg.pinv(laplacian_dense(A), rcond=1e-12, hermitian=True)


def first_step_hitting(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Mean hitting times from the absorbing-chain equations.

    For target j and i != j: ``H_ij = w_i / d_i + sum_k P_ik H_kj``.
    """
    n = A.shape[0]
    d = A.sum(1)
    P = A / d[:, None]
    H = np.zeros((n, n))
    for j in range(n):
        others = [i for i in range(n) if i != j]
        M = np.eye(n - 1) - P[np.ix_(others, others)]
        H[others, j] = np.linalg.solve(M, w[others] / d[others])
    return H


def bfs_components(A: np.ndarray) -> list[list[int]]:
    n = A.shape[0]
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        comp, queue = [], deque([s])
        seen[s] = True
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in np.flatnonzero(A[u]):
                if not seen[v]:
                    seen[v] = True
                    queue.append(int(v))
        comps.append(sorted(comp))
    return comps


def best_partition_inertia(X: np.ndarray, k: int) -> float:
    """Exact k-means optimum by enumerating every labeling (small inputs only)."""
    n = X.shape[0]
    best = np.inf
    for labels in itertools.product(range(k), repeat=n - 1):
        labels = (0,) + labels
        if len(set(labels)) != k:
            continue
        lab = np.array(labels)
        total = 0.0
        for c in range(k):
            pts = X[lab == c]
            total += ((pts - pts.mean(0)) ** 2).sum()
        best = min(best, total)
    return best


def random_connected_graph(rng: np.random.Generator, n: int, p: float = 0.3, wmax: float = 2.0) -> Graph:
    """Random spanning tree plus Erdos-Renyi extras, edge weights in (0, wmax]."""
    A = np.zeros((n, n))
    order = rng.permutation(n)
    for t in range(1, n):
        a, b = order[t], order[rng.integers(t)]
        A[a, b] = A[b, a] = 1.0
    extra = np.triu(rng.random((n, n)) < p, 1)
    mask = np.triu((A > 0) | extra, 1)
    W = np.triu(wmax * (1.0 - rng.random((n, n))), 1) * mask
    return Graph(sp.csr_matrix(W + W.T))


def random_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.exp(rng.uniform(np.log(0.2), np.log(5.0), n))
