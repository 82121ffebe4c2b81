"""Graph and node-weight model: ingestion, validation, components."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import GraphInputError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with a symmetric, non-negative sparse adjacency.

    Parameters
    ----------
    adjacency : scipy.sparse matrix, shape (n, n)
        Edge weights ``A_ij``. Stored as CSR with explicit zeros removed.
    labels : sequence of str, optional
        External node ids, ``labels[i]`` naming internal node ``i``.
        Defaults to ``"0", "1", ...``.
    """

    adjacency: sp.csr_matrix
    labels: tuple[str, ...] = ()
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=float, copy=True)
        if A.shape[0] != A.shape[1]:
            raise GraphInputError(f"adjacency must be square, got {A.shape}")
        A.eliminate_zeros()
        A.sort_indices()
        if A.nnz and (A.data < 0).any():
            raise GraphInputError("adjacency has negative entries")
        if A.nnz and not np.isfinite(A.data).all():
            raise GraphInputError("adjacency has non-finite entries")
        if A.diagonal().any():
            raise GraphInputError("adjacency has self-loops")
        asym = abs(A - A.T)
        if asym.nnz and asym.max() > 1e-12 * max(1.0, abs(A).max()):
            raise GraphInputError("adjacency is not symmetric")
        n = A.shape[0]
        labels = tuple(str(x) for x in self.labels) if self.labels else tuple(str(i) for i in range(n))
        if len(labels) != n:
            raise GraphInputError(f"{len(labels)} labels for {n} nodes")
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != n:
            raise GraphInputError("node labels are not unique")
        A.data.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        """Row sums ``d = A e`` (may contain zeros for isolated nodes)."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def index_of(self, label) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise GraphInputError(f"unknown node {label!r}") from None

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        ncomp, _ = connected_components(self.adjacency, directed=False)
        return ncomp == 1

    def subgraph(self, nodes: Iterable[int]) -> "Graph":
        idx = np.asarray(sorted(set(int(i) for i in nodes)), dtype=int)
        A = self.adjacency[idx][:, idx]
        return Graph(A, tuple(self.labels[i] for i in idx))


@dataclass(frozen=True, eq=False)
class NodeWeights:
    """Positive node weights ``w`` with total ``|w|`` and distribution ``pi = w/|w|``."""

    values: np.ndarray

    def __post_init__(self):
        w = np.array(self.values, dtype=float).ravel()
        if w.size == 0:
            raise GraphInputError("empty weight vector")
        bad = np.flatnonzero(~(np.isfinite(w) & (w > 0)))
        if bad.size:
            raise GraphInputError(f"weight of node {bad[0]} is not a positive real: {w[bad[0]]}")
        object.__setattr__(self, "values", _frozen(w))

    @classmethod
    def unit(cls, n: int) -> "NodeWeights":
        return cls(np.ones(n))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def pi(self) -> np.ndarray:
        return self.values / self.values.sum()


def _open_lines(source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
        return
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw


def _parse_positive(token: str, what: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise GraphInputError(f"cannot parse {what} {token!r}", lineno) from None
    if not math.isfinite(value) or value <= 0:
        raise GraphInputError(f"{what} must be a positive real, got {token}", lineno)
    return value


def load_edge_list(source, weighted: bool | None = None, comment_prefix: str = "#") -> Graph:
    """Read a whitespace-separated edge list.

    Lines are ``src dst`` or ``src dst weight``; blank lines and lines
    starting with ``comment_prefix`` are skipped. Labels are numbered in
    order of first appearance and duplicate edges (in either direction)
    have their weights summed.

    ``weighted=None`` uses the third column when present, ``True`` requires
    it and ``False`` ignores it (every edge counts 1).
    """
    index: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for lineno, line in enumerate(_open_lines(source), start=1):
        text = line.strip()
        if not text or (comment_prefix and text.startswith(comment_prefix)):
            continue
        parts = text.split()
        if len(parts) not in (2, 3):
            raise GraphInputError(f"expected 'src dst [weight]', got {text!r}", lineno)
        if weighted and len(parts) == 2:
            raise GraphInputError("missing edge weight", lineno)
        src, dst = parts[0], parts[1]
        if src == dst:
            raise GraphInputError(f"self-loop on node {src!r}", lineno)
        weight = 1.0
        if len(parts) == 3 and weighted is not False:
            weight = _parse_positive(parts[2], "edge weight", lineno)
        for lab in (src, dst):
            if lab not in index:
                index[lab] = len(index)
        rows.append(index[src])
        cols.append(index[dst])
        vals.append(weight)
    n = len(index)
    directed = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()  # sums duplicates
    A = directed + directed.T
    return Graph(A, tuple(index))


def write_edge_list(g: Graph, stream: IO[str]) -> None:
    """Write each undirected edge once as ``src dst weight``."""
    upper = sp.triu(g.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    for k in order:
        i, j, a = upper.row[k], upper.col[k], upper.data[k]
        stream.write(f"{g.labels[i]}\t{g.labels[j]}\t{a:.17g}\n")


def internal_weights(g: Graph) -> NodeWeights:
    """Internal node weights ``d = A e``; isolated nodes are an error."""
    d = g.degrees
    zero = np.flatnonzero(d <= 0)
    if zero.size:
        raise GraphInputError(
            f"node {g.labels[zero[0]]!r} is isolated (internal weight 0); "
            "extract the largest connected component first"
        )
    return NodeWeights(d)


def load_node_weights(source, g: Graph, require_all: bool = False, default: float = 1.0) -> NodeWeights:
    """Read ``node_id weight`` lines aligned to the graph's internal indexing.

    Nodes absent from the file get ``default`` unless ``require_all`` is set.
    """
    w = np.full(g.n, np.nan)
    for lineno, line in enumerate(_open_lines(source), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise GraphInputError(f"expected 'node_id weight', got {text!r}", lineno)
        label, token = parts
        if label not in g._index:
            raise GraphInputError(f"unknown node {label!r}", lineno)
        value = _parse_positive(token, "node weight", lineno)
        i = g._index[label]
        if not np.isnan(w[i]):
            raise GraphInputError(f"duplicate weight for node {label!r}", lineno)
        w[i] = value
    missing = np.flatnonzero(np.isnan(w))
    if missing.size:
        if require_all:
            raise GraphInputError(f"no weight given for node {g.labels[missing[0]]!r}")
        w[missing] = default
    return NodeWeights(w)


def connected_component_labels(g: Graph) -> np.ndarray:
    _, comp = connected_components(g.adjacency, directed=False)
    return comp


def largest_connected_component(g: Graph) -> tuple[Graph, dict[int, int]]:
    """Induced subgraph on the largest component and its old -> new index map.

    Ties between equally large components go to the one containing the
    smallest internal index.
    """
    comp = connected_component_labels(g)
    sizes = np.bincount(comp)
    first = np.full(sizes.size, g.n)
    np.minimum.at(first, comp, np.arange(g.n))
    best = min(range(sizes.size), key=lambda c: (-sizes[c], first[c]))
    keep = np.flatnonzero(comp == best)
    mapping = {int(old): new for new, old in enumerate(keep)}
    if keep.size == g.n:
        return g, mapping
    return g.subgraph(keep), mapping


def boost_weights(w: NodeWeights, subset: Iterable[int], factor: float) -> NodeWeights:
    """Multiply the weights of ``subset`` by ``factor``."""
    if not (factor > 0 and math.isfinite(factor)):
        raise GraphInputError(f"boost factor must be positive, got {factor}")
    idx = np.fromiter((int(i) for i in subset), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= w.n):
        bad = idx[(idx < 0) | (idx >= w.n)][0]
        raise GraphInputError(f"unknown node {bad} in boost subset")
    values = w.values.copy()
    values[np.unique(idx)] *= factor
    return NodeWeights(values)


def path_graph(n: int) -> Graph:
    A = sp.diags([np.ones(n - 1), np.ones(n - 1)], [1, -1], shape=(n, n))
    return Graph(A)


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs at least 3 nodes")
    i = np.arange(n)
    A = sp.coo_matrix((np.ones(n), (i, (i + 1) % n)), shape=(n, n))
    return Graph(A + A.T)


def complete_graph(n: int) -> Graph:
    return Graph(np.ones((n, n)) - np.eye(n))


def two_triangles() -> Graph:
    """Two triangles {0,1,2} and {3,4,5} joined by the bridge 2-3."""
    edges = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]
    r, c = zip(*edges)
    A = sp.coo_matrix((np.ones(len(edges)), (r, c)), shape=(6, 6))
    return Graph(A + A.T)

