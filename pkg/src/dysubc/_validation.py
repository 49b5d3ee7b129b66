"""Input checks shared by the estimators."""

import numpy as np

from .graph import TemporalGraph


def check_temporal_graph(X) -> TemporalGraph:
    if not isinstance(X, TemporalGraph):
        raise TypeError(f"expected a TemporalGraph, got {type(X).__name__}")
    if X.n < 1:
        raise ValueError("graph has no nodes")
    return X


def check_node_index(nodes, n: int) -> np.ndarray:
    idx = np.asarray(nodes)
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        raise TypeError("node ids must be integers")
    idx = idx.astype(np.intp, copy=False)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"node id out of range [0, {n})")
    return idx


def check_pairs(pairs, n: int) -> np.ndarray:
    arr = np.asarray([(p[0], p[1]) for p in pairs], dtype=np.intp).reshape(-1, 2)
    check_node_index(arr, n)
    return arr


def check_binary_labels(y) -> np.ndarray:
    y = np.asarray(y)
    values = np.unique(y)
    if not np.isin(values, (0, 1)).all():
        raise ValueError(f"labels must be 0/1, got {values[:5]}")
    if len(values) < 2:
        raise ValueError("both classes must be present")
    return y.astype(np.int64)
