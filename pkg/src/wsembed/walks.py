"""Random-walk statistics of the weighted continuous-time walk.

The walk leaves node ``i`` at rate ``d_i / w_i`` and jumps to ``k`` with
probability ``A_ik / d_i``; its stationary distribution is ``pi = w / |w|``.
Every exact quantity here reduces to solves against the Laplacian with the
constant vector projected out, so nothing materializes ``L^+`` unless asked.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DisconnectedGraphError, GraphInputError, TooLargeError
from .graph import Graph, NodeWeights, connected_component_labels
from .spectral import DENSE_CAP, build_laplacian, generalized_eigenvectors, Spectrum


class LaplacianSolver:
    """Solves ``L z = b`` for ``e^T b = 0`` with the normalization ``e^T z = 0``.

    The Laplacian is grounded at one node (its row and column removed), the
    remaining SPD block is factorized once, and solutions are re-centred.
    """

    def __init__(self, g: Graph):
        if g.n == 0:
            raise GraphInputError("empty graph")
        if not g.is_connected():
            raise DisconnectedGraphError(
                "graph is disconnected; extract the largest connected component first"
            )
        self.n = g.n
        L = build_laplacian(g).matrix
        self.ground = int(np.argmax(g.degrees))
        keep = np.delete(np.arange(g.n), self.ground)
        self._keep = keep
        self._lu = splu(sp.csc_matrix(L[keep][:, keep])) if keep.size else None

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        col = b.ndim == 1
        B = b[:, None] if col else b
        scale = max(1.0, np.abs(B).max(initial=0.0))
        if np.abs(B.sum(axis=0)).max(initial=0.0) > 1e-9 * scale * self.n:
            raise ValueError("right-hand side must sum to zero")
        Z = np.zeros((self.n, B.shape[1]))
        if self._lu is not None:
            Z[self._keep] = self._lu.solve(np.ascontiguousarray(B[self._keep]))
        Z -= Z.mean(axis=0)
        return Z[:, 0] if col else Z


_solvers: "weakref.WeakKeyDictionary[Graph, LaplacianSolver]" = weakref.WeakKeyDictionary()


def laplacian_solver(g: Graph) -> LaplacianSolver:
    """Cached :class:`LaplacianSolver` for ``g``."""
    solver = _solvers.get(g)
    if solver is None:
        solver = _solvers[g] = LaplacianSolver(g)
    return solver


def _check_nodes(g: Graph, *nodes: int) -> None:
    for v in nodes:
        if not (0 <= int(v) < g.n):
            raise GraphInputError(f"node index {v} out of range for {g.n} nodes")


def _check_weights(g: Graph, w: NodeWeights) -> None:
    if w.n != g.n:
        raise GraphInputError(f"{w.n} weights for {g.n} nodes")


def _centered_potential(g: Graph, w: NodeWeights, j: int) -> np.ndarray:
    """``L^+ (e_j - pi)``, i.e. the Gram column of ``x_j - xbar`` against all ``x_i``."""
    b = -w.pi
    b[j] += 1.0
    return laplacian_solver(g).solve(b)


def hitting_column(g: Graph, w: NodeWeights, j: int) -> np.ndarray:
    """Mean hitting times of ``j`` from every start node."""
    _check_weights(g, w)
    _check_nodes(g, j)
    z = _centered_potential(g, w, j)
    h = w.total * (z[j] - z)
    h[j] = 0.0
    return h


def hitting_time(g: Graph, w: NodeWeights, i: int, j: int) -> float:
    """Mean time for the weighted walk started at ``i`` to first reach ``j``.

    ``H_ij = |w| (e_j - e_i)^T L^+ (e_j - pi)``.
    """
    _check_weights(g, w)
    _check_nodes(g, i, j)
    if i == j:
        return 0.0
    z = _centered_potential(g, w, j)
    return float(w.total * (z[j] - z[i]))


def hitting_time_unit(g: Graph, i: int, j: int) -> float:
    """Hitting time of the unit-weight walk, ``n (e_j - e_i)^T L^+ e_j``."""
    _check_nodes(g, i, j)
    if i == j:
        return 0.0
    b = -np.full(g.n, 1.0 / g.n)
    b[j] += 1.0
    z = laplacian_solver(g).solve(b)
    return float(g.n * (z[j] - z[i]))


def effective_resistance(g: Graph, i: int, j: int) -> float:
    """``(e_i - e_j)^T L^+ (e_i - e_j)``, the squared embedding distance."""
    _check_nodes(g, i, j)
    if i == j:
        raise ValueError("effective resistance needs two distinct nodes")
    b = np.zeros(g.n)
    b[i], b[j] = 1.0, -1.0
    z = laplacian_solver(g).solve(b)
    return float(z[i] - z[j])


def commute_time(g: Graph, w: NodeWeights, i: int, j: int) -> float:
    """``C_ij = |w| * R_ij``; depends on ``w`` only through its total."""
    _check_weights(g, w)
    _check_nodes(g, i, j)
    if i == j:
        return 0.0
    return w.total * effective_resistance(g, i, j)


def stationary_hitting(g: Graph, w: NodeWeights, j: int) -> float:
    """Mean hitting time of ``j`` from the stationary distribution, ``|w| ||x_j - xbar||^2``."""
    _check_weights(g, w)
    _check_nodes(g, j)
    z = _centered_potential(g, w, j)
    return float(w.total * (z[j] - w.pi @ z))


def cosine_similarity(g: Graph, w: NodeWeights, i: int, j: int) -> float:
    """Cosine of the angle between ``x_i - xbar`` and ``x_j - xbar``."""
    _check_weights(g, w)
    _check_nodes(g, i, j)
    zi = _centered_potential(g, w, i)
    zj = zi if i == j else _centered_potential(g, w, j)
    gii = zi[i] - w.pi @ zi
    gjj = zj[j] - w.pi @ zj
    if gii <= 0 or gjj <= 0:
        bad = i if gii <= 0 else j
        raise ValueError(f"node {bad} sits at the center of mass; similarity undefined")
    if i == j:
        return 1.0
    gij = zj[i] - w.pi @ zj
    return float(np.clip(gij / np.sqrt(gii * gjj), -1.0, 1.0))


@dataclass(frozen=True)
class PairStatistics:
    i: int
    j: int
    hitting: float
    hitting_back: float
    commute: float
    similarity: float


def pair_statistics(g: Graph, w: NodeWeights, i: int, j: int) -> PairStatistics:
    """``H_ij``, ``H_ji``, ``C_ij`` and ``S_ij`` from two Laplacian solves."""
    _check_weights(g, w)
    _check_nodes(g, i, j)
    if i == j:
        return PairStatistics(i, j, 0.0, 0.0, 0.0, cosine_similarity(g, w, i, i))
    zi = _centered_potential(g, w, i)
    zj = _centered_potential(g, w, j)
    gii, gjj = zi[i] - w.pi @ zi, zj[j] - w.pi @ zj
    gij = zj[i] - w.pi @ zj
    total = w.total
    return PairStatistics(
        i,
        j,
        float(total * (zj[j] - zj[i])),
        float(total * (zi[i] - zi[j])),
        float(total * (gii + gjj - 2 * gij)),
        float(np.clip(gij / np.sqrt(gii * gjj), -1.0, 1.0)),
    )


@dataclass(frozen=True, eq=False)
class WalkStatistics:
    """Full matrices of walk statistics; ``hitting[i, j]`` is ``H_ij``."""

    hitting: np.ndarray
    commute: np.ndarray
    stationary_hitting: np.ndarray
    similarity: np.ndarray


def walk_statistics(g: Graph, w: NodeWeights, cap: int = DENSE_CAP) -> WalkStatistics:
    _check_weights(g, w)
    if g.n > cap:
        raise TooLargeError(f"hitting-time matrix limited to {cap} nodes, graph has {g.n}")
    pi = w.pi
    Z = laplacian_solver(g).solve(np.eye(g.n) - pi[:, None])
    G = Z - pi @ Z  # G_ij = (x_i - xbar)^T (x_j - xbar)
    diag = np.diag(G).copy()
    total = w.total
    H = total * (diag[None, :] - G)
    np.fill_diagonal(H, 0.0)
    C = total * (diag[:, None] + diag[None, :] - 2 * G)
    np.fill_diagonal(C, 0.0)
    C = (C + C.T) / 2
    G = (G + G.T) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.clip(G / np.sqrt(np.outer(diag, diag)), -1.0, 1.0)
    np.fill_diagonal(S, np.where(diag > 0, 1.0, np.nan))
    return WalkStatistics(H, C, total * diag, S)


@dataclass(frozen=True, eq=False)
class DirichletSolution:
    """Potentials with ``v[source] = 1`` and ``v[sink] = 0`` at equilibrium.

    ``alpha`` is the flux through the boundary: ``L v = alpha (e_source - e_sink)``.
    """

    source: int
    sink: int
    potentials: np.ndarray
    alpha: float

    def charge(self, w: NodeWeights) -> float:
        """``q = sum_k w_k v_k``."""
        return float(w.values @ self.potentials)

    def weighted_mean(self, w: NodeWeights) -> float:
        return float(w.pi @ self.potentials)

    def hitting_times(self, w: NodeWeights) -> tuple[float, float]:
        """``(H_source,sink, H_sink,source) = (q / alpha, (|w| - q) / alpha)``."""
        q = self.charge(w)
        return q / self.alpha, (w.total - q) / self.alpha

    def commute_time(self, w: NodeWeights) -> float:
        return w.total / self.alpha


def dirichlet_solve(g: Graph, i: int, j: int) -> DirichletSolution:
    """Harmonic potentials pinned to 1 at ``i`` and 0 at ``j``.

    Solves the interior block ``L_II v_I = -L_Ii`` directly; node weights
    play no role.
    """
    _check_nodes(g, i, j)
    if i == j:
        raise ValueError("Dirichlet problem needs distinct source and sink")
    if not g.is_connected():
        raise DisconnectedGraphError("graph is disconnected; extract the largest connected component first")
    L = build_laplacian(g).matrix
    v = np.zeros(g.n)
    v[i] = 1.0
    interior = np.setdiff1d(np.arange(g.n), [i, j])
    if interior.size:
        L_int = sp.csc_matrix(L[interior][:, interior])
        rhs = -L[interior][:, [i]].toarray().ravel()
        v[interior] = splu(L_int).solve(rhs)
    alpha = float((L[[i]] @ v)[0])
    v.setflags(write=False)
    return DirichletSolution(i, j, v, alpha)


def hitting_via_dirichlet(g: Graph, w: NodeWeights, i: int, j: int) -> float:
    """``H_ij = q / alpha`` where ``q`` is the ``w``-weighted sum of Dirichlet potentials."""
    _check_weights(g, w)
    if i == j:
        return 0.0
    return dirichlet_solve(g, i, j).hitting_times(w)[0]


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    stderr: float
    trials: int
    seed: int


def simulate_hitting(g: Graph, w: NodeWeights, i: int, j: int, trials: int, seed: int) -> SimulationResult:
    """Monte Carlo estimate of ``H_ij`` by simulating the continuous-time walk.

    All trials advance together, one jump per sweep, from a single generator
    seeded with ``seed``; the result does not depend on any linear algebra.
    """
    _check_weights(g, w)
    _check_nodes(g, i, j)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if i == j:
        return SimulationResult(0.0, 0.0, trials, seed)
    comp = connected_component_labels(g)
    if comp[i] != comp[j]:
        raise DisconnectedGraphError(f"node {j} is unreachable from node {i}")

    A = g.adjacency
    indptr, indices, data = A.indptr, A.indices, A.data
    d = g.degrees
    rate = d / w.values
    row = np.repeat(np.arange(g.n), np.diff(indptr))
    # row r occupies (r, r + 1] in the global cumulative jump table
    cum = np.empty_like(data)
    for r in range(g.n):
        lo, hi = indptr[r], indptr[r + 1]
        cum[lo:hi] = np.cumsum(data[lo:hi]) / d[r] if hi > lo else 0.0
    cum += row

    rng = np.random.default_rng(seed)
    pos = np.full(trials, i)
    elapsed = np.zeros(trials)
    active = np.arange(trials)
    while active.size:
        here = pos[active]
        elapsed[active] += rng.exponential(1.0, active.size) / rate[here]
        k = np.searchsorted(cum, here + rng.random(active.size), side="right")
        k = np.clip(k, indptr[here], indptr[here + 1] - 1)
        pos[active] = indices[k]
        active = active[pos[active] != j]

    mean = float(elapsed.mean())
    stderr = float(elapsed.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SimulationResult(mean, stderr, trials, seed)


def generalized_modes(g: Graph, w: NodeWeights, cap: int = DENSE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """All solutions of ``L v = lam W v`` with ``V^T W V = I``, ascending in ``lam``."""
    _check_weights(g, w)
    if g.n > cap:
        raise TooLargeError(f"full eigenmode expansion limited to {cap} nodes, graph has {g.n}")
    op = build_laplacian(g, "weighted", w)
    lam, U = np.linalg.eigh(op.toarray())
    spec = Spectrum(lam, U, "weighted", np.zeros_like(lam))
    return lam, generalized_eigenvectors(spec, w)


def relaxation_check(g: Graph, w: NodeWeights, v0: np.ndarray, t: float, cap: int = DENSE_CAP) -> np.ndarray:
    """Potentials ``exp(-W^-1 L t) v0`` of the RC network after time ``t``.

    Expands ``v0`` in generalized eigenmodes and decays each by ``exp(-lam t)``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (g.n,):
        raise GraphInputError(f"initial state must have {g.n} entries")
    if t == 0:
        return v0.copy()
    lam, V = generalized_modes(g, w, cap)
    lam = np.maximum(lam, 0.0)
    coeff = V.T @ (w.values * v0)
    return V @ (np.exp(-lam * t) * coeff)
