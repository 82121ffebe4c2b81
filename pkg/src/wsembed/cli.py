"""Command-line front end.

Every subcommand is a pure function of its flags, input files and seed.
Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .clustering import kmeans_pp, normalize_rows, summarize_clusters
from .errors import ConvergenceError, DisconnectedGraphError, GraphInputError, TooLargeError
from .graph import (
    Graph,
    NodeWeights,
    boost_weights,
    complete_graph,
    cycle_graph,
    internal_weights,
    largest_connected_component,
    load_edge_list,
    load_node_weights,
    path_graph,
    two_triangles,
    write_edge_list,
)
from .spectral import DEFAULT_TOL, MODES, Embedding, embed, read_embedding, write_embedding, write_sidecar
from .walks import dirichlet_solve, pair_statistics, simulate_hitting

log = logging.getLogger("wsembed")

ENV_PREFIX = "WSEMBED_"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    edges: str | None = None
    edge_weights: bool | None = None
    lcc: bool = False
    mode: str = "weighted"
    weights: str | None = None
    weights_file: str | None = None
    require_all_weights: bool = False
    boost_subset: str | None = None
    boost_factor: float = 10.0
    k: int = 100
    tol: float = DEFAULT_TOL
    seed: int | None = None
    method: str = "auto"
    restarts: int = 100
    clusters: int = 20
    fraction: float = 0.5
    top_m: int = 5
    threads: int = 1
    out: str | None = None
    stdout: bool = False
    strict: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.weights_file and self.weights not in (None, "file"):
            raise UsageError("--weights-file requires --weights file")
        if self.weights == "file" and not self.weights_file:
            raise UsageError("--weights file requires --weights-file")
        if self.k < 1:
            raise UsageError("--k must be at least 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if not 0 < self.fraction <= 1:
            raise UsageError("--fraction must lie in (0, 1]")
        for name in ("restarts", "clusters", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name} must be at least 1")
        if self.top_m < 0:
            raise UsageError("--top-m must be non-negative")
        if not self.boost_factor > 0:
            raise UsageError("--boost-factor must be positive")

    def weight_source(self) -> str:
        if self.weights:
            return self.weights
        if self.weights_file:
            return "file"
        if self.command in ("embed", "cluster") and self.mode != "regular":
            return "internal"
        return "unit"

    def echo(self) -> dict:
        skip = {"extra", "stdout"}
        return {k: v for k, v in sorted(vars(self).items()) if k not in skip}


@dataclass
class Inputs:
    graph: Graph
    weights: NodeWeights


def _read_labels(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.split()[0] for line in fh if line.strip() and not line.startswith("#")]


def load_inputs(cfg: RunConfig) -> Inputs:
    """Graph and node weights after optional component extraction and boosting."""
    if not cfg.edges:
        raise UsageError("--edges is required")
    g = load_edge_list(cfg.edges, weighted=cfg.edge_weights)
    if g.n == 0:
        raise GraphInputError(f"{cfg.edges}: no edges")
    source = cfg.weight_source()
    file_w = None
    if source == "file":
        file_w = load_node_weights(cfg.weights_file, g, require_all=cfg.require_all_weights)
    boost = None
    if cfg.boost_subset:
        boost = [g.index_of(lab) for lab in _read_labels(cfg.boost_subset)]

    if cfg.lcc:
        g_full = g
        g, mapping = largest_connected_component(g_full)
        if g is not g_full:
            log.info("kept largest component: %d of %d nodes", g.n, g_full.n)
        keep = np.array(sorted(mapping), dtype=int)
        if file_w is not None:
            file_w = NodeWeights(file_w.values[keep])
        if boost is not None:
            boost = [mapping[i] for i in boost if i in mapping]
    if not g.is_connected():
        raise DisconnectedGraphError(
            "graph is disconnected; pass --lcc to keep the largest connected component"
        )

    if source == "unit":
        w = NodeWeights.unit(g.n)
    elif source == "internal":
        w = internal_weights(g)
    elif source == "file":
        w = file_w
    else:
        raise UsageError(f"unknown weight source {source!r}")
    if boost is not None:
        w = boost_weights(w, boost, cfg.boost_factor)
    return Inputs(g, w)


def _provenance(cfg: RunConfig) -> dict:
    return {
        "config": cfg.echo(),
        "versions": {"wsembed": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }


@contextmanager
def _output(cfg: RunConfig, suffix: str):
    if cfg.stdout:
        yield sys.stdout
        return
    path = Path(f"{cfg.out or 'wsembed-' + cfg.command}{suffix}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh
    log.info("wrote %s", path)


def _write_json(cfg: RunConfig, suffix: str, payload) -> None:
    if cfg.stdout:
        return
    with _output(cfg, suffix) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _embedding(cfg: RunConfig, inp: Inputs) -> Embedding:
    w = None if cfg.mode == "regular" else inp.weights
    start = time.perf_counter()
    emb = embed(inp.graph, cfg.mode, cfg.k, w, cfg.tol, cfg.seed, cfg.method)
    log.info("%s embedding, k=%d: %.2fs", cfg.mode, cfg.k, time.perf_counter() - start)
    return emb


def cmd_embed(cfg: RunConfig) -> int:
    if cfg.mode == "regular" and cfg.weight_source() != "unit":
        raise UsageError("regular mode embeds with unit weights; drop --weights/--boost-subset")
    inp = load_inputs(cfg)
    emb = _embedding(cfg, inp)
    with _output(cfg, ".tsv") as fh:
        write_embedding(emb, fh)
    if not cfg.stdout:
        with _output(cfg, ".json") as fh:
            write_sidecar(emb, fh, _provenance(cfg))
    return EXIT_OK


def _embedding_from_file(cfg: RunConfig, inp: Inputs, path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        labels, coords = read_embedding(fh)
    if len(labels) != inp.graph.n:
        raise GraphInputError(f"{path}: {len(labels)} rows for {inp.graph.n} graph nodes")
    pos = {lab: r for r, lab in enumerate(labels)}
    order = np.array([pos.get(lab, -1) for lab in inp.graph.labels])
    if (order < 0).any():
        raise GraphInputError(f"{path}: node {inp.graph.labels[int(np.argmin(order))]!r} missing")
    return coords[order]


def cmd_cluster(cfg: RunConfig) -> int:
    inp = load_inputs(cfg)
    g = inp.graph
    if cfg.extra.get("embedding"):
        coords = _embedding_from_file(cfg, inp, cfg.extra["embedding"])
    else:
        coords = _embedding(cfg, inp).coords
    points = normalize_rows(coords)
    start = time.perf_counter()
    model = kmeans_pp(points, cfg.clusters, cfg.restarts, seed=cfg.seed, threads=cfg.threads)
    log.info("k-means, %d restarts: %.2fs (inertia %.6g)", cfg.restarts, time.perf_counter() - start, model.inertia)
    mass = inp.weights
    summary = summarize_clusters(model, points, internal_weights(g), mass, cfg.fraction, cfg.top_m)

    with _output(cfg, ".clusters.tsv") as fh:
        fh.write("node\tcluster\n")
        for label, c in zip(g.labels, model.assignment):
            fh.write(f"{label}\t{int(c)}\n")
    payload = [
        {
            "cluster_id": info.cluster_id,
            "size": info.size,
            "weighted_size": info.weighted_size,
            "representatives": [g.labels[i] for i in info.representatives],
        }
        for info in summary
    ]
    _write_json(cfg, ".summary.json", payload)
    _write_json(
        cfg,
        ".json",
        {**_provenance(cfg), "inertia": model.inertia, "best_restart": model.best_restart},
    )
    return EXIT_OK


def _pairs(cfg: RunConfig, g: Graph) -> list[tuple[int, int]]:
    raw = list(cfg.extra.get("pair") or [])
    if cfg.extra.get("pairs_file"):
        with open(cfg.extra["pairs_file"], encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if len(parts) != 2:
                    raise GraphInputError("expected 'i j'", lineno)
                raw.append(parts)
    if not raw:
        raise UsageError("no node pairs given (use --pair I J or --pairs-file)")
    return [(g.index_of(a), g.index_of(b)) for a, b in raw]


def cmd_walk(cfg: RunConfig) -> int:
    inp = load_inputs(cfg)
    g, w = inp.graph, inp.weights
    rows = [pair_statistics(g, w, i, j) for i, j in _pairs(cfg, g)]
    with _output(cfg, ".tsv") as fh:
        fh.write("i\tj\tH_ij\tH_ji\tC_ij\tS_ij\n")
        for r in rows:
            values = "\t".join(_fmt(x) for x in (r.hitting, r.hitting_back, r.commute, r.similarity))
            fh.write(f"{g.labels[r.i]}\t{g.labels[r.j]}\t{values}\n")
    return EXIT_OK


def cmd_dirichlet(cfg: RunConfig) -> int:
    inp = load_inputs(cfg)
    g, w = inp.graph, inp.weights
    i, j = g.index_of(cfg.extra["source"]), g.index_of(cfg.extra["sink"])
    sol = dirichlet_solve(g, i, j)
    h_ij, h_ji = sol.hitting_times(w)
    summary = {
        "source": g.labels[i],
        "sink": g.labels[j],
        "alpha": sol.alpha,
        "q": sol.charge(w),
        "vbar": sol.weighted_mean(w),
        "H_ij": h_ij,
        "H_ji": h_ji,
        "C_ij": sol.commute_time(w),
    }
    if cfg.stdout:
        summary["potentials"] = {lab: float(v) for lab, v in zip(g.labels, sol.potentials)}
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    with _output(cfg, ".tsv") as fh:
        fh.write("node\tpotential\n")
        for lab, v in zip(g.labels, sol.potentials):
            fh.write(f"{lab}\t{_fmt(v)}\n")
    _write_json(cfg, ".json", summary)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    trials = cfg.extra["trials"]
    if trials < 1:
        raise UsageError("--trials must be at least 1")
    inp = load_inputs(cfg)
    g, w = inp.graph, inp.weights
    i, j = g.index_of(cfg.extra["source"]), g.index_of(cfg.extra["sink"])
    res = simulate_hitting(g, w, i, j, trials, cfg.seed)
    payload = {"mean": res.mean, "stderr": res.stderr, "trials": res.trials, "seed": res.seed}
    if cfg.stdout:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        _write_json(cfg, ".json", payload)
    return EXIT_OK


FIXTURES = {
    "path": path_graph,
    "cycle": cycle_graph,
    "complete": complete_graph,
    "two-triangles": lambda n: two_triangles(),
}


def cmd_fixture(cfg: RunConfig) -> int:
    kind, n = cfg.extra["kind"], cfg.extra["n"]
    if kind != "two-triangles" and n < 2:
        raise UsageError("fixture needs at least 2 nodes")
    g = FIXTURES[kind](n)
    with _output(cfg, ".tsv") as fh:
        write_edge_list(g, fh)
    return EXIT_OK


COMMANDS = {
    "embed": cmd_embed,
    "cluster": cmd_cluster,
    "walk": cmd_walk,
    "dirichlet": cmd_dirichlet,
    "simulate": cmd_simulate,
    "fixture": cmd_fixture,
}
NEEDS_SEED = {"embed", "cluster", "simulate"}


def _add_common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    if graph:
        p.add_argument("--edges", help="edge list: 'src dst [weight]' per line")
        p.add_argument("--edge-weights", dest="edge_weights", action="store_true", default=None,
                       help="require a weight column in the edge list")
        p.add_argument("--lcc", action="store_true", help="keep only the largest connected component")
        p.add_argument("--weights", choices=["unit", "internal", "file"],
                       help="node weight source (default: internal for shifted/weighted, else unit)")
        p.add_argument("--weights-file", help="'node_id weight' per line; missing nodes get 1")
        p.add_argument("--require-all-weights", action="store_true")
        p.add_argument("--boost-subset", help="file of node ids whose weights are multiplied")
        p.add_argument("--boost-factor", type=float, default=10.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_true", help="fail when --seed is missing")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--stdout", action="store_true", help="write data to standard output")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_embedding(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, default="weighted")
    p.add_argument("--k", type=int, default=100, help="embedding dimension")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--method", choices=["auto", "dense", "lanczos"], default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsembed", description="Weighted spectral embedding of graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="write an embedding TSV and JSON sidecar")
    _add_common(p)
    _add_embedding(p)

    p = sub.add_parser("cluster", help="k-means++ on the normalized embedding")
    _add_common(p)
    _add_embedding(p)
    p.add_argument("--embedding", help="reuse a saved embedding TSV instead of recomputing")
    p.add_argument("--clusters", type=int, default=20)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--top-m", dest="top_m", type=int, default=5)

    p = sub.add_parser("walk", help="hitting, commute times and similarity for node pairs")
    _add_common(p)
    p.add_argument("--pair", nargs=2, action="append", metavar=("I", "J"))
    p.add_argument("--pairs-file")

    p = sub.add_parser("dirichlet", help="potentials pinned to 1 at the source and 0 at the sink")
    _add_common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--sink", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo hitting time")
    _add_common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--sink", required=True)
    p.add_argument("--trials", type=int, default=100000)

    p = sub.add_parser("fixture", help="write a small test graph as an edge list")
    _add_common(p, graph=False)
    p.add_argument("kind", choices=sorted(FIXTURES))
    p.add_argument("--n", type=int, default=3)

    for p in sub.choices.values():
        _apply_env_defaults(p)
    return parser


def _apply_env_defaults(p: argparse.ArgumentParser) -> None:
    """``WSEMBED_<DEST>`` environment variables override flag defaults."""
    for action in p._actions:
        if not action.option_strings or action.dest in ("help", "version"):
            continue
        raw = os.environ.get(ENV_PREFIX + action.dest.upper())
        if raw is None:
            continue
        if isinstance(action, (argparse._StoreTrueAction,)) or action.dest == "edge_weights":
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                value = action.type(raw)
            except ValueError:
                p.error(f"{ENV_PREFIX}{action.dest.upper()}: invalid value {raw!r}")
        else:
            value = raw
        if action.choices is not None and value not in action.choices:
            p.error(f"{ENV_PREFIX}{action.dest.upper()}: invalid choice {raw!r}")
        p.set_defaults(**{action.dest: value})
        if action.required:
            action.required = False


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    known = set(RunConfig.__dataclass_fields__) - {"extra"}
    values = vars(ns).copy()
    values.pop("verbose", None)
    cfg_kwargs = {k: v for k, v in values.items() if k in known}
    extra = {k: v for k, v in values.items() if k not in known}
    return RunConfig(**cfg_kwargs, extra=extra)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    cfg = config_from_args(ns)
    try:
        cfg.validate()
        if cfg.seed is None and cfg.command in NEEDS_SEED:
            if cfg.strict:
                raise UsageError("--seed is required in --strict mode")
            cfg.seed = secrets.randbits(32)
            print(f"wsembed: no --seed given, using seed {cfg.seed}", file=sys.stderr)
        return COMMANDS[cfg.command](cfg)
    except ConvergenceError as exc:
        print(f"wsembed: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, GraphInputError, DisconnectedGraphError, TooLargeError, ValueError, OSError) as exc:
        print(f"wsembed: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
