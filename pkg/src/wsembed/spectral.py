"""Laplacians, eigensolvers and the regular / shifted / weighted embeddings."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import ConvergenceError, DisconnectedGraphError, GraphInputError, TooLargeError
from .graph import Graph, NodeWeights

DENSE_CAP = 2000
DEFAULT_TOL = 1e-8
MODES = ("regular", "shifted", "weighted")


@dataclass(frozen=True, eq=False)
class LaplacianOperator:
    """Sparse Laplacian ``L = D - A`` or weighted Laplacian ``W^-1/2 L W^-1/2``."""

    kind: str
    graph: Graph
    matrix: sp.csr_matrix
    weights: NodeWeights | None = None

    @property
    def n(self) -> int:
        return self.graph.n

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.matrix.shape, matvec=self.apply, matmat=self.apply, dtype=float)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def kernel_vector(self) -> np.ndarray:
        """Unit vector spanning the kernel of a connected graph's operator."""
        if self.kind == "regular":
            v = np.ones(self.n)
        else:
            v = np.sqrt(self.weights.values)
        return v / np.linalg.norm(v)


def build_laplacian(g: Graph, kind: str = "regular", w: NodeWeights | None = None) -> LaplacianOperator:
    A = g.adjacency
    L = (sp.diags(g.degrees) - A).tocsr()
    if kind == "regular":
        return LaplacianOperator("regular", g, L)
    if kind != "weighted":
        raise ValueError(f"unknown Laplacian kind {kind!r}")
    if w is None:
        raise ValueError("weighted Laplacian requires node weights")
    if w.n != g.n:
        raise GraphInputError(f"{w.n} weights for {g.n} nodes")
    s = sp.diags(1.0 / np.sqrt(w.values))
    return LaplacianOperator("weighted", g, (s @ L @ s).tocsr(), w)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """The ``k`` smallest eigenpairs of a Laplacian operator, ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str
    residuals: np.ndarray

    @property
    def k(self) -> int:
        return self.eigenvalues.size


def fix_signs(U: np.ndarray, threshold: float = 1e-8) -> np.ndarray:
    """Flip columns so the first entry with magnitude above ``threshold`` is positive."""
    U = np.array(U, dtype=float)
    for c in range(U.shape[1]):
        big = np.flatnonzero(np.abs(U[:, c]) > threshold)
        if big.size and U[big[0], c] < 0:
            U[:, c] = -U[:, c]
    return U


def _residuals(op: LaplacianOperator, lam: np.ndarray, U: np.ndarray) -> np.ndarray:
    return np.linalg.norm(op.apply(U) - U * lam, axis=0)


def _solve_dense(op: LaplacianOperator, k: int):
    lam, U = np.linalg.eigh(op.toarray())
    return lam[:k], U[:, :k]


def _solve_lanczos(op: LaplacianOperator, k: int, tol: float, seed: int):
    n = op.n
    v0 = np.random.default_rng(seed).standard_normal(n)
    ncv = min(n, max(2 * k + 1, k + 32))
    try:
        lam, U = eigsh(op.matrix, k=k, which="SA", v0=v0, tol=tol, ncv=ncv, maxiter=50 * k)
    except ArpackNoConvergence as exc:
        best = _residuals(op, exc.eigenvalues, exc.eigenvectors) if exc.eigenvalues.size else None
        raise ConvergenceError(
            f"Lanczos did not converge: {exc.eigenvalues.size} of {k} eigenpairs found", best
        ) from None
    order = np.argsort(lam, kind="stable")
    return lam[order], U[:, order]


def eigensolve(
    op: LaplacianOperator,
    k: int,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    method: str = "auto",
    dense_cap: int = DENSE_CAP,
) -> Spectrum:
    """Compute the ``k`` smallest eigenpairs of ``op``.

    Parameters
    ----------
    op : LaplacianOperator
    k : int
        Number of eigenpairs, ``1 <= k <= n``.
    tol : float
        Residual bound: every pair satisfies
        ``||op u - lam u|| <= tol * max(1, lam)``.
    seed : int
        Seed of the Lanczos start vector (unused by the dense path).
    method : {"auto", "dense", "lanczos"}
        ``auto`` picks the dense solver up to ``dense_cap`` nodes. Lanczos
        falls back to dense when ``k >= n - 1``.

    Raises
    ------
    ConvergenceError
        If the residual bound is not met; ``exc.residuals`` holds the best
        residuals reached.
    """
    n = op.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "auto":
        method = "dense" if n <= dense_cap else "lanczos"
    if method == "lanczos" and k >= n - 1:
        method = "dense"
    if method == "dense":
        lam, U = _solve_dense(op, k)
    elif method == "lanczos":
        lam, U = _solve_lanczos(op, k, tol, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    U = fix_signs(U)
    res = _residuals(op, lam, U)
    if (res > tol * np.maximum(1.0, np.abs(lam))).any():
        raise ConvergenceError(f"eigenpair residuals above tol={tol}: max {res.max():.3e}", res)
    for a in (lam, U, res):
        a.setflags(write=False)
    return Spectrum(lam, U, op.kind, res)


@dataclass(frozen=True, eq=False)
class Embedding:
    """Node coordinates, one row per node, trivial dimension already dropped.

    ``eigenvalues`` are the ``k`` informative eigenvalues used for scaling;
    ``weights`` is ``None`` for the regular mode.
    """

    mode: str
    coords: np.ndarray
    eigenvalues: np.ndarray
    labels: tuple[str, ...]
    weights: NodeWeights | None = None
    tol: float = DEFAULT_TOL
    seed: int = 0

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def k(self) -> int:
        return self.coords.shape[1]

    def gram(self) -> np.ndarray:
        return self.coords @ self.coords.T

    def sidecar(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "n": self.n,
            "tol": self.tol,
            "seed": self.seed,
            "eigenvalues": [float(x) for x in self.eigenvalues],
        }


def _check_embedding_args(g: Graph, k: int) -> None:
    if not g.is_connected():
        raise DisconnectedGraphError(
            "graph is disconnected (second eigenvalue is zero); "
            "extract the largest connected component first"
        )
    if not 1 <= k <= g.n - 1:
        raise ValueError(f"embedding dimension must be in [1, {g.n - 1}], got {k}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def regular_embedding(
    g: Graph, k: int, tol: float = DEFAULT_TOL, seed: int = 0, method: str = "auto"
) -> Embedding:
    """Rows ``(u_2i / sqrt(lam_2), ..., u_{k+1,i} / sqrt(lam_{k+1}))`` of the Laplacian spectrum."""
    _check_embedding_args(g, k)
    spec = eigensolve(build_laplacian(g), k + 1, tol, seed, method)
    lam = spec.eigenvalues[1:]
    if lam[0] <= 1e-10:
        raise DisconnectedGraphError("second Laplacian eigenvalue is numerically zero")
    coords = spec.eigenvectors[:, 1:] / np.sqrt(lam)
    return Embedding("regular", _readonly(coords), _readonly(lam.copy()), g.labels, None, tol, seed)


def generalized_eigenvectors(spec: Spectrum, w: NodeWeights) -> np.ndarray:
    """``V = W^-1/2 U`` so that ``L v = lam W v`` and ``V^T W V = I``."""
    return spec.eigenvectors / np.sqrt(w.values)[:, None]


def weighted_embedding(
    g: Graph, w: NodeWeights, k: int, tol: float = DEFAULT_TOL, seed: int = 0, method: str = "auto"
) -> Embedding:
    """Embedding from the weighted Laplacian; its ``w``-weighted centroid is the origin."""
    _check_embedding_args(g, k)
    spec = eigensolve(build_laplacian(g, "weighted", w), k + 1, tol, seed, method)
    lam = spec.eigenvalues[1:]
    if lam[0] <= 1e-10:
        raise DisconnectedGraphError("second weighted Laplacian eigenvalue is numerically zero")
    coords = generalized_eigenvectors(spec, w)[:, 1:] / np.sqrt(lam)
    return Embedding("weighted", _readonly(coords), _readonly(lam.copy()), g.labels, w, tol, seed)


def shifted_embedding(x: Embedding, w: NodeWeights) -> Embedding:
    """Translate a regular embedding so its ``pi``-weighted center of mass is the origin."""
    if x.mode != "regular":
        raise ValueError(f"shifted embedding needs a regular embedding, got mode {x.mode!r}")
    if w.n != x.n:
        raise GraphInputError(f"{w.n} weights for {x.n} nodes")
    center = w.pi @ x.coords
    return Embedding("shifted", _readonly(x.coords - center), x.eigenvalues, x.labels, w, x.tol, x.seed)


def embed(
    g: Graph,
    mode: str,
    k: int,
    w: NodeWeights | None = None,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    method: str = "auto",
) -> Embedding:
    """Dispatch on ``mode``; shifted and weighted modes need ``w``."""
    if mode == "regular":
        return regular_embedding(g, k, tol, seed, method)
    if w is None:
        raise ValueError(f"{mode} embedding requires node weights")
    if mode == "shifted":
        return shifted_embedding(regular_embedding(g, k, tol, seed, method), w)
    if mode == "weighted":
        return weighted_embedding(g, w, k, tol, seed, method)
    raise ValueError(f"unknown embedding mode {mode!r}")


def pseudo_inverse(op: LaplacianOperator, cutoff: float = 1e-10, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense Moore-Penrose pseudo-inverse from a full eigendecomposition.

    Eigenvalues at or below ``max(cutoff, n * eps * lam_max)`` count as zero.
    """
    if op.n > cap:
        raise TooLargeError(f"dense pseudo-inverse limited to {cap} nodes, graph has {op.n}")
    lam, U = np.linalg.eigh(op.toarray())
    lam_max = max(abs(lam[-1]), abs(lam[0])) if lam.size else 0.0
    keep = lam > max(cutoff, op.n * np.finfo(float).eps * lam_max)
    Uk = U[:, keep]
    M = (Uk / lam[keep]) @ Uk.T
    return (M + M.T) / 2


def write_embedding(emb: Embedding, stream: IO[str]) -> None:
    """TSV with a header row; coordinates at 17 significant digits."""
    stream.write("node\t" + "\t".join(f"x{c + 1}" for c in range(emb.k)) + "\n")
    for label, row in zip(emb.labels, emb.coords):
        stream.write(label + "\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")


def write_sidecar(emb: Embedding, stream: IO[str], extra: dict | None = None) -> None:
    payload = emb.sidecar()
    if extra:
        payload.update(extra)
    json.dump(payload, stream, indent=2, sort_keys=True)
    stream.write("\n")


def read_embedding(stream: IO[str]) -> tuple[tuple[str, ...], np.ndarray]:
    """Inverse of :func:`write_embedding`: returns ``(labels, coords)``."""
    header = stream.readline()
    if not header.startswith("node"):
        raise GraphInputError("embedding TSV must start with a 'node' header", 1)
    labels, rows = [], []
    for lineno, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        labels.append(parts[0])
        try:
            rows.append([float(x) for x in parts[1:]])
        except ValueError:
            raise GraphInputError("non-numeric coordinate", lineno) from None
    return tuple(labels), np.array(rows, dtype=float)
