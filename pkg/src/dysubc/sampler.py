"""Importance-ranked temporal subgraph sampling."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import GraphError, TemporalGraph

CACHE_MAGIC = "dysubc-subgraphs/1"


@dataclass(frozen=True)
class SamplerConfig:
    k: int = 20
    alpha: float = 10.0
    use_time: bool = True  # False drops the recency term from the score

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


@dataclass
class TemporalSubgraph:
    """Induced neighbourhood of ``center``; position 0 always holds the center."""

    center: int
    nodes: np.ndarray  # global ids, shape (k',)
    A_time: np.ndarray  # (k', k') normalized edge recency
    A_plain: np.ndarray  # (k', k') binary
    hop_dist: np.ndarray  # BFS depth of each node
    tau: np.ndarray  # normalized interaction time w.r.t. the center

    @property
    def size(self) -> int:
        return len(self.nodes)


def importance_score(g: TemporalGraph, j: int, alpha: float, use_time: bool = True) -> float:
    """Recency of node ``j``'s latest edge plus ``alpha`` times its degree."""
    nbrs = g.adj[j]
    if not nbrs:
        raise GraphError(f"node {j} has no incident edges")
    s_struct = float(len(nbrs))
    if not use_time:
        return s_struct
    return float(g.recency[j]) + alpha * s_struct


def extract_matrices(g: TemporalGraph, nodes) -> tuple[np.ndarray, np.ndarray]:
    nodes = [int(v) for v in nodes]
    if len(set(nodes)) != len(nodes):
        raise GraphError("duplicate node ids in subgraph selection")
    m = len(nodes)
    pos = {v: p for p, v in enumerate(nodes)}
    A_time = np.zeros((m, m))
    for p, u in enumerate(nodes):
        for v, (_, w) in g.adj[u].items():
            q = pos.get(v)
            if q is not None:
                A_time[p, q] = w
    A_plain = np.zeros((m, m))
    for p, u in enumerate(nodes):
        for v in g.adj[u]:
            q = pos.get(v)
            if q is not None:
                A_plain[p, q] = 1.0
    return A_time, A_plain


def sample_subgraph(g: TemporalGraph, center: int, cfg: SamplerConfig) -> TemporalSubgraph:
    """Grow a subgraph of at most ``cfg.k`` nodes layer by layer from ``center``.

    A BFS layer is admitted whole while it fits in the remaining budget;
    the layer that does not fit is ranked by :func:`importance_score`
    (ties go to the smaller id) and truncated.
    """
    if not 0 <= center < g.n:
        raise GraphError(f"center {center} out of range for {g.n} nodes")
    k = cfg.k
    nodes = [center]
    hops = [0]
    # recency of the edge through which each node was reached
    via = [float("nan")]
    admitted = {center}
    frontier = [center]
    depth = 0
    while len(nodes) < k and frontier:
        depth += 1
        parent_edge: dict[int, float] = {}
        for u in frontier:
            for v, (_, w) in g.adj[u].items():
                if v not in admitted and v not in parent_edge:
                    parent_edge[v] = w
        if not parent_edge:
            break
        budget = k - len(nodes)
        cand = sorted(parent_edge)
        if len(cand) > budget:
            scored = sorted(cand, key=lambda v: (-importance_score(g, v, cfg.alpha, cfg.use_time), v))
            cand = sorted(scored[:budget])
        for v in cand:
            nodes.append(v)
            hops.append(depth)
            via.append(parent_edge[v])
            admitted.add(v)
        frontier = cand

    A_time, A_plain = extract_matrices(g, nodes)
    tau = np.empty(len(nodes))
    own = g.adj[center]
    tau[0] = g.recency[center] if own else 0.0
    for p in range(1, len(nodes)):
        direct = own.get(nodes[p])
        tau[p] = direct[1] if direct is not None else via[p]
    return TemporalSubgraph(
        center=center,
        nodes=np.asarray(nodes, dtype=np.int64),
        A_time=A_time,
        A_plain=A_plain,
        hop_dist=np.asarray(hops, dtype=np.int64),
        tau=tau,
    )


def _sample_range(args):
    g, centers, cfg = args
    return [sample_subgraph(g, c, cfg) for c in centers]


def sample_all(g: TemporalGraph, cfg: SamplerConfig, n_jobs: int = 1) -> list[TemporalSubgraph]:
    """Sample one subgraph per node, in node order."""
    centers = list(range(g.n))
    if n_jobs <= 1 or g.n < 2 * n_jobs:
        return [sample_subgraph(g, c, cfg) for c in centers]
    chunks = [centers[i::n_jobs] for i in range(n_jobs)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(_sample_range, [(g, ch, cfg) for ch in chunks]))
    out: list[TemporalSubgraph | None] = [None] * g.n
    for chunk, part in zip(chunks, parts):
        for c, sub in zip(chunk, part):
            out[c] = sub
    return out  # type: ignore[return-value]


def save_subgraphs(path, subgraphs, cfg: SamplerConfig, graph_key: str = "") -> None:
    """Write subgraphs to a compressed ``.npz`` cache stamped with the sampler settings."""
    sizes = np.array([s.size for s in subgraphs], dtype=np.int64)
    edges = []
    for s in subgraphs:
        p, q = np.nonzero(np.triu(s.A_plain, 1))
        edges.append(np.stack([p, q, s.A_time[p, q]], axis=1) if len(p) else np.zeros((0, 3)))
    n_edges = np.array([len(e) for e in edges], dtype=np.int64)
    np.savez_compressed(
        path,
        magic=np.array(CACHE_MAGIC),
        stamp=np.array(_stamp(cfg, graph_key)),
        centers=np.array([s.center for s in subgraphs], dtype=np.int64),
        sizes=sizes,
        nodes=np.concatenate([s.nodes for s in subgraphs]),
        hops=np.concatenate([s.hop_dist for s in subgraphs]),
        tau=np.concatenate([s.tau for s in subgraphs]),
        n_edges=n_edges,
        edges=np.concatenate(edges),
    )


def _stamp(cfg: SamplerConfig, graph_key: str) -> str:
    return f"k={cfg.k} alpha={cfg.alpha!r} use_time={int(cfg.use_time)} graph={graph_key}"


def load_subgraphs(path, cfg: SamplerConfig | None = None, graph_key: str = "") -> list[TemporalSubgraph]:
    """Read a cache written by :func:`save_subgraphs`.

    Raises ``ValueError`` when the file is not a cache or, if ``cfg`` is
    given, when it was produced with different settings.
    """
    path = Path(path)
    with np.load(path, allow_pickle=False) as z:
        if "magic" not in z or str(z["magic"]) != CACHE_MAGIC:
            raise ValueError(f"{path} is not a subgraph cache")
        if cfg is not None and str(z["stamp"]) != _stamp(cfg, graph_key):
            raise ValueError(f"stale subgraph cache {path}: {z['stamp']}")
        data = {key: z[key] for key in z.files}
    out = []
    node_off = np.concatenate([[0], np.cumsum(data["sizes"])])
    edge_off = np.concatenate([[0], np.cumsum(data["n_edges"])])
    for i, c in enumerate(data["centers"]):
        a, b = node_off[i], node_off[i + 1]
        m = b - a
        A_time = np.zeros((m, m))
        A_plain = np.zeros((m, m))
        for p, q, w in data["edges"][edge_off[i]:edge_off[i + 1]]:
            p, q = int(p), int(q)
            A_time[p, q] = A_time[q, p] = w
            A_plain[p, q] = A_plain[q, p] = 1.0
        out.append(TemporalSubgraph(
            center=int(c),
            nodes=data["nodes"][a:b].copy(),
            A_time=A_time,
            A_plain=A_plain,
            hop_dist=data["hops"][a:b].copy(),
            tau=data["tau"][a:b].copy(),
        ))
    return out
