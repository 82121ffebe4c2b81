"""Weighted spectral embedding of graphs with node weights."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DisconnectedGraphError, GraphInputError, TooLargeError
from .graph import (
    Graph,
    NodeWeights,
    boost_weights,
    internal_weights,
    largest_connected_component,
    load_edge_list,
    load_node_weights,
)
from .spectral import (
    Embedding,
    LaplacianOperator,
    Spectrum,
    build_laplacian,
    eigensolve,
    embed,
    pseudo_inverse,
    regular_embedding,
    shifted_embedding,
    weighted_embedding,
)
from .walks import (
    DirichletSolution,
    commute_time,
    cosine_similarity,
    dirichlet_solve,
    effective_resistance,
    hitting_time,
    hitting_time_unit,
    hitting_via_dirichlet,
    relaxation_check,
    simulate_hitting,
    stationary_hitting,
)
from .clustering import ClusterModel, kmeans_pp, normalize_rows, summarize_clusters
