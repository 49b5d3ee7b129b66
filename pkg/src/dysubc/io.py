"""Embedding, metrics and interaction files."""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import TemporalEvent


def export_embeddings(table: np.ndarray, node_ids: Sequence[int] | None, path) -> None:
    """Write ``N d`` then one ``<original id> v1 ... vd`` line per node."""
    table = np.asarray(table, dtype=float)
    n, d = table.shape
    ids = range(n) if node_ids is None else node_ids
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} embedding rows")
    with open(path, "w") as fh:
        fh.write(f"{n} {d}\n")
        for nid, row in zip(ids, table):
            fh.write(str(nid) + " " + " ".join(f"{x:.17g}" for x in row) + "\n")


def read_embeddings(path) -> tuple[list[int], np.ndarray]:
    lines = Path(path).read_text().splitlines()
    n, d = (int(x) for x in lines[0].split())
    ids, rows = [], []
    for line in lines[1:1 + n]:
        parts = line.split()
        if len(parts) != d + 1:
            raise ValueError(f"{path}: expected {d + 1} fields, got {len(parts)}")
        ids.append(int(parts[0]))
        rows.append([float(x) for x in parts[1:]])
    if len(rows) != n:
        raise ValueError(f"{path}: header promises {n} rows, found {len(rows)}")
    return ids, np.array(rows).reshape(n, d)


def write_recent_interactions(events: Sequence[TemporalEvent], node_ids, path, count: int = 10) -> None:
    """The ``count`` latest events as ``u v t`` lines (original ids, newest last)."""
    latest = sorted(events, key=lambda e: e.t)[-count:]
    with open(path, "w") as fh:
        for u, v, t in latest:
            fh.write(f"{node_ids[u]} {node_ids[v]} {t!r}\n")


def write_metrics(values: dict, path) -> None:
    with open(path, "w") as fh:
        for key, value in values.items():
            fh.write(f"{key}={value}\n")


def read_metrics(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key] = value
    return out


def file_digest(path, length: int = 16) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:length]
