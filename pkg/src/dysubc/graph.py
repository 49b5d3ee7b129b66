"""Temporal edge lists, the deduplicated temporal graph, and link-prediction splits."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed temporal graph input."""


class TemporalEvent(NamedTuple):
    src: int
    dst: int
    t: float


_SPLIT = re.compile(r"[\s,]+")


def parse_edge_list(path, columns: Sequence[int] = (0, 1, 2)):
    """Read a timestamped edge list.

    Columns may be separated by spaces, tabs or commas; lines starting with
    ``#`` or ``%`` are skipped, as are self-loops. Node ids are remapped to a
    dense ``0..n-1`` range in order of first appearance.

    Returns
    -------
    events : list of TemporalEvent
        Events in file order, using dense ids.
    node_ids : list of int
        ``node_ids[i]`` is the original id of dense node ``i``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphError(f"cannot read {path}: {exc}") from exc

    src_col, dst_col, t_col = columns
    need = max(columns) + 1
    index: dict[int, int] = {}
    node_ids: list[int] = []
    events: list[TemporalEvent] = []

    def dense(raw: int) -> int:
        if raw not in index:
            index[raw] = len(node_ids)
            node_ids.append(raw)
        return index[raw]

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line[0] in "#%":
            continue
        parts = _SPLIT.split(line)
        if len(parts) < need:
            raise GraphError(f"{path}:{lineno}: expected at least {need} columns, got {len(parts)}")
        try:
            u = int(parts[src_col])
            v = int(parts[dst_col])
            t = float(parts[t_col])
        except ValueError as exc:
            raise GraphError(f"{path}:{lineno}: malformed line {line!r}") from exc
        if u < 0 or v < 0:
            raise GraphError(f"{path}:{lineno}: negative node id")
        if not math.isfinite(t) or t < 0:
            raise GraphError(f"{path}:{lineno}: timestamp must be finite and non-negative")
        if u == v:
            continue
        events.append(TemporalEvent(dense(u), dense(v), t))

    if not events:
        raise GraphError(f"{path}: no events")
    return events, node_ids


@dataclass(frozen=True)
class TemporalGraph:
    """Undirected graph keeping only the latest timestamp per node pair.

    ``adj[u]`` maps each neighbour ``v`` to ``(t_latest, w)``, where ``w`` is
    ``t_latest`` min-max normalized over all surviving pair timestamps.
    """

    n: int
    adj: tuple[dict[int, tuple[float, float]], ...]
    t_min: float
    t_max: float
    degree: np.ndarray = field(repr=False)

    @property
    def n_pairs(self) -> int:
        return int(self.degree.sum()) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def weight(self, u: int, v: int) -> float:
        entry = self.adj[u].get(v)
        return 0.0 if entry is None else entry[1]

    def latest_time(self, u: int, v: int) -> float | None:
        entry = self.adj[u].get(v)
        return None if entry is None else entry[0]

    def normalize(self, t: float) -> float:
        if self.t_max > self.t_min:
            return (t - self.t_min) / (self.t_max - self.t_min)
        return 1.0

    @cached_property
    def recency(self) -> np.ndarray:
        """Largest normalized timestamp over each node's edges (NaN when isolated)."""
        out = np.full(self.n, np.nan)
        for u, nbrs in enumerate(self.adj):
            if nbrs:
                out[u] = max(w for _, w in nbrs.values())
        out.flags.writeable = False
        return out

    def pairs(self):
        """Yield each undirected pair once as ``(u, v, t_latest, w)`` with ``u < v``."""
        for u, nbrs in enumerate(self.adj):
            for v, (t, w) in nbrs.items():
                if u < v:
                    yield u, v, t, w

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for u, v, _, w in self.pairs():
            A[u, v] = A[v, u] = w
        return A


def build_graph(events: Sequence[TemporalEvent], n: int | None = None) -> TemporalGraph:
    """Symmetrize, deduplicate (latest timestamp wins) and normalize ``events``.

    ``n`` fixes the node count; it defaults to ``1 + max id`` so nodes that
    only appear in held-out events can still be represented.
    """
    if len(events) == 0:
        raise GraphError("cannot build a graph from an empty event list")
    latest: dict[tuple[int, int], float] = {}
    max_id = -1
    for u, v, t in events:
        max_id = max(max_id, u, v)
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        prev = latest.get(key)
        if prev is None or t > prev:
            latest[key] = float(t)
    if n is None:
        n = max_id + 1
    elif n <= max_id:
        raise GraphError(f"node count {n} too small for node id {max_id}")

    adj: list[dict[int, tuple[float, float]]] = [dict() for _ in range(n)]
    if latest:
        ts = latest.values()
        t_min, t_max = min(ts), max(ts)
    else:
        t_min = t_max = 0.0
    span = t_max - t_min
    for (u, v), t in latest.items():
        w = (t - t_min) / span if span > 0 else 1.0
        adj[u][v] = (t, w)
        adj[v][u] = (t, w)
    degree = np.array([len(a) for a in adj], dtype=np.int64)
    return TemporalGraph(n=n, adj=tuple(adj), t_min=t_min, t_max=t_max, degree=degree)


@dataclass
class EdgeSplit:
    train_pos: list[TemporalEvent]
    val_pos: list[TemporalEvent]
    test_pos: list[TemporalEvent]
    val_neg: list[tuple[int, int]] = field(default_factory=list)
    test_neg: list[tuple[int, int]] = field(default_factory=list)

    def write(self, directory, node_ids: Sequence[int] | None = None) -> None:
        """Write ``{train,val,test}_pos.txt`` and ``{val,test}_neg.txt`` using original ids."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        def orig(i: int) -> int:
            return node_ids[i] if node_ids is not None else i

        for name in ("train_pos", "val_pos", "test_pos"):
            lines = [f"{orig(u)} {orig(v)} {t!r}\n" for u, v, t in getattr(self, name)]
            (directory / f"{name}.txt").write_text("".join(lines))
        for name in ("val_neg", "test_neg"):
            lines = [f"{orig(u)} {orig(v)}\n" for u, v in getattr(self, name)]
            (directory / f"{name}.txt").write_text("".join(lines))


def _split_sizes(total: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    # the epsilon absorbs binary rounding such as 0.1 * 30 -> 2.9999...
    n_train = int(math.floor(fractions[0] * total + 1e-9))
    n_val = int(math.floor(fractions[1] * total + 1e-9))
    return n_train, n_val, total - n_train - n_val


def temporal_split(events: Sequence[TemporalEvent], fractions=(0.75, 0.10, 0.15), seed: int = 0) -> EdgeSplit:
    """Chronological train split; the most recent block is randomly divided into val/test.

    Negative pairs are left empty; fill them with :func:`sample_negatives`.
    """
    if len(events) < 3:
        raise GraphError("need at least 3 events to split")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise GraphError(f"fractions must be three non-negative values summing to 1, got {fractions}")
    ordered = sorted(events, key=lambda e: e.t)  # stable
    n_train, n_val, _ = _split_sizes(len(ordered), fractions)
    recent = ordered[n_train:]
    order = np.random.default_rng(seed).permutation(len(recent))
    val_idx = np.sort(order[:n_val])
    test_idx = np.sort(order[n_val:])
    return EdgeSplit(
        train_pos=list(ordered[:n_train]),
        val_pos=[recent[i] for i in val_idx],
        test_pos=[recent[i] for i in test_idx],
    )


def sample_negatives(g: TemporalGraph, count: int, seed=0, exclude=(), max_tries: int | None = None):
    """Draw ``count`` distinct unordered non-edges ``(u, v)`` with ``u < v`` by rejection.

    Pairs in ``exclude`` are treated as unavailable in addition to the edges of ``g``.
    """
    if count < 0:
        raise GraphError("count must be non-negative")
    n = g.n
    taken = {(min(u, v), max(u, v)) for u, v in exclude}
    available = n * (n - 1) // 2 - g.n_pairs - sum(1 for u, v in taken if not g.has_edge(u, v))
    if count > available:
        raise GraphError(f"graph too dense: requested {count} negative pairs, only {available} exist")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if max_tries is None:
        max_tries = 100 * count + 1000
    out: list[tuple[int, int]] = []
    chosen: set[tuple[int, int]] = set()
    tries = 0
    while len(out) < count:
        if tries >= max_tries:
            raise GraphError(f"gave up after {tries} draws with {len(out)}/{count} negative pairs")
        batch = rng.integers(0, n, size=(max(64, 2 * (count - len(out))), 2))
        for u, v in batch.tolist():
            tries += 1
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            if key in chosen or key in taken or g.has_edge(u, v):
                continue
            chosen.add(key)
            out.append(key)
            if len(out) == count:
                break
    return out


class OneHotFeatures:
    """Implicit ``n x n`` identity feature matrix.

    ``X[idx] @ W`` reduces to ``W[idx]``; the identity is never materialized.
    """

    def __init__(self, n: int):
        self.n = n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def row(self, i: int) -> np.ndarray:
        e = np.zeros(self.n)
        e[i] = 1.0
        return e

    def project(self, W: np.ndarray, idx=None) -> np.ndarray:
        """Return ``X[idx] @ W`` (all rows when ``idx`` is None)."""
        if W.shape[0] != self.n:
            raise ValueError(f"W has {W.shape[0]} rows, expected {self.n}")
        return W if idx is None else W[np.asarray(idx, dtype=np.intp)]


def one_hot_features(g: TemporalGraph) -> OneHotFeatures:
    return OneHotFeatures(g.n)
