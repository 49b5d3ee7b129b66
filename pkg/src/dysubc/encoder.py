"""One-layer GCN encoder, center pick-out, and the two subgraph readouts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import TemporalSubgraph


@dataclass
class EncoderParams:
    W: np.ndarray  # (n, d); with one-hot inputs this is the node feature table
    prelu_slope: float = 0.25

    @classmethod
    def init(cls, n: int, d: int, rng: np.random.Generator) -> "EncoderParams":
        bound = np.sqrt(6.0 / (n + d))
        return cls(W=rng.uniform(-bound, bound, size=(n, d)), prelu_slope=0.25)

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.W.copy(), float(self.prelu_slope))


@dataclass
class SubgraphEmbedding:
    H: np.ndarray
    h_center: np.ndarray
    s_weighted: np.ndarray
    s_plain: np.ndarray


def prelu(x: np.ndarray, a: float) -> np.ndarray:
    return np.where(x >= 0, x, a * x)


def propagation_matrix(A: np.ndarray) -> np.ndarray:
    """``D^-1/2 (A + I) D^-1/2`` with ``D`` the row sums of ``A + I``."""
    A_hat = A + np.eye(A.shape[0])
    d = 1.0 / np.sqrt(A_hat.sum(axis=1))
    return d[:, None] * A_hat * d[None, :]


def gcn_forward(sub: TemporalSubgraph, params: EncoderParams, weighted: bool = True) -> np.ndarray:
    A = sub.A_time if weighted else sub.A_plain
    return prelu(propagation_matrix(A) @ params.W[sub.nodes], params.prelu_slope)


def pick_out(H: np.ndarray, position: int = 0) -> np.ndarray:
    if len(H) == 0:
        raise ValueError("empty representation matrix")
    return H[position]


def influence_scores(sub: TemporalSubgraph, beta: float) -> np.ndarray:
    """Recency plus ``beta / distance``; the center counts as distance 1."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    dist = np.maximum(sub.hop_dist, 1).astype(float)
    return sub.tau + beta / dist


def readout_weighted(H: np.ndarray, inf: np.ndarray) -> np.ndarray:
    total = float(np.sum(inf))
    if not total > 0:
        raise ValueError(f"influence scores must have a positive sum, got {total}")
    return (inf / total) @ H


def readout_mean(H: np.ndarray) -> np.ndarray:
    return H.mean(axis=0)


def encode_pair(sub: TemporalSubgraph, params1: EncoderParams, params2: EncoderParams,
                beta: float, time_readout: bool = True) -> SubgraphEmbedding:
    """Run both encoders on one subgraph.

    ``time_readout=False`` swaps the influence-weighted summary for a plain mean.
    """
    H = gcn_forward(sub, params1, weighted=True)
    if time_readout:
        s = readout_weighted(H, influence_scores(sub, beta))
    else:
        s = readout_mean(H)
    H2 = gcn_forward(sub, params2, weighted=False)
    return SubgraphEmbedding(H=H, h_center=pick_out(H), s_weighted=s, s_plain=readout_mean(H2))
