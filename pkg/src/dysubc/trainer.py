"""Contrastive training with hand-derived gradients and Adam."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .encoder import EncoderParams, influence_scores, propagation_matrix
from .sampler import TemporalSubgraph

logger = logging.getLogger(__name__)

HINGES = ("printed", "conventional")


@dataclass
class TrainConfig:
    k: int = 20
    alpha: float = 10.0
    beta: float = 1.6
    lam: float = 0.5
    phi: float = 0.75
    varphi: float = 0.75
    lr: float = 0.001
    epochs: int = 800
    batch_size: int = 0  # 0 = full batch
    dim: int = 128
    seed: int = 42
    time_readout: bool = True
    time_weights: bool = True  # False feeds the plain adjacency to both encoders
    hinge: str = "printed"
    shared_encoder: bool = True  # E2 reuses E1's weights
    patience: int = 10

    def __post_init__(self):
        if self.phi < 0 or self.varphi < 0:
            raise ValueError("margins must be non-negative")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.epochs < 0 or self.batch_size < 0:
            raise ValueError("epochs and batch_size must be non-negative")
        if self.hinge not in HINGES:
            raise ValueError(f"hinge must be one of {HINGES}")

    def to_dict(self) -> dict:
        return asdict(self)


def sigmoid(x):
    return expit(x)


def margin_term(h, s_pos, s_neg, margin: float) -> float:
    """``-max(sigmoid(h.s_pos) - sigmoid(h.s_neg) + margin, 0)``."""
    gap = sigmoid(np.dot(h, s_pos)) - sigmoid(np.dot(h, s_neg)) + margin
    return -max(float(gap), 0.0)


def total_loss(batch, phi: float, varphi: float, lam: float) -> tuple[float, float, float]:
    """Average the two margin terms over ``(h, s, s_shuffled, s_plain)`` tuples."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    L1 = float(np.mean([margin_term(h, s, st, phi) for h, s, st, _ in batch]))
    L2 = float(np.mean([margin_term(h, s, sp, varphi) for h, s, _, sp in batch]))
    return L1 + lam * L2, L1, L2


def shuffle_summaries(S: Sequence, rng) -> tuple[list, np.ndarray]:
    """Uniformly permute ``S``; returns the shuffled list and the permutation used."""
    if len(S) < 1:
        raise ValueError("nothing to shuffle")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    perm = rng.permutation(len(S))
    return [S[i] for i in perm], perm


class SubgraphBatch:
    """Precomputed propagation operators for a set of subgraphs.

    Each subgraph occupies ``K`` consecutive rows (``K`` = largest subgraph);
    ``M1 @ W`` yields the pre-activations of every slot directly, folding the
    one-hot row gather into the propagation. Padding rows are empty and carry
    zero readout weight, so they never reach outputs or gradients.
    """

    def __init__(self, subgraphs: Sequence[TemporalSubgraph], beta: float,
                 time_readout: bool = True, time_weights: bool = True, n: int | None = None):
        B = len(subgraphs)
        K = max(s.size for s in subgraphs)
        if n is None:
            n = 1 + max(int(s.nodes.max()) for s in subgraphs)
        self.K = K
        self.n = n
        self.R1 = np.zeros((B, K))
        self.R2 = np.zeros((B, K))
        rows, cols, v1, v2 = [], [], [], []
        for b, sub in enumerate(subgraphs):
            m = sub.size
            A1 = sub.A_time if time_weights else sub.A_plain
            P1 = propagation_matrix(A1)
            P2 = propagation_matrix(sub.A_plain)
            r, c = np.nonzero(P2)  # P1 shares the sparsity pattern of P2
            rows.append(b * K + r)
            cols.append(sub.nodes[c])
            v1.append(P1[r, c])
            v2.append(P2[r, c])
            if time_readout:
                inf = influence_scores(sub, beta)
                self.R1[b, :m] = inf / inf.sum()
            else:
                self.R1[b, :m] = 1.0 / m
            self.R2[b, :m] = 1.0 / m
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        shape = (B * K, n)
        self.M1 = sparse.csr_matrix((np.concatenate(v1), (rows, cols)), shape=shape)
        self.M2 = sparse.csr_matrix((np.concatenate(v2), (rows, cols)), shape=shape)
        self.M1T = self.M1.T.tocsr()
        self.M2T = self.M2.T.tocsr()
        self.centers = np.array([s.center for s in subgraphs], dtype=np.intp)

    def __len__(self) -> int:
        return len(self.centers)

    def take(self, rows) -> "SubgraphBatch":
        rows = np.asarray(rows)
        slots = (rows[:, None] * self.K + np.arange(self.K)).ravel()
        out = object.__new__(SubgraphBatch)
        out.K, out.n = self.K, self.n
        out.R1, out.R2, out.centers = self.R1[rows], self.R2[rows], self.centers[rows]
        out.M1, out.M2 = self.M1[slots], self.M2[slots]
        out.M1T, out.M2T = out.M1.T.tocsr(), out.M2.T.tocsr()
        return out

    def preactivations(self, W: np.ndarray, which: int = 1) -> np.ndarray:
        M = self.M1 if which == 1 else self.M2
        return (M @ W).reshape(len(self), self.K, W.shape[1])


@dataclass
class Forward:
    Z1: np.ndarray
    Z2: np.ndarray
    h: np.ndarray
    s: np.ndarray
    s_shuf: np.ndarray
    s_plain: np.ndarray
    perm: np.ndarray
    L: float
    L1: float
    L2: float


def encode(batch: SubgraphBatch, p1: EncoderParams, p2: EncoderParams | None = None):
    """Center embeddings, both summaries and pre-activations for every subgraph in ``batch``."""
    Z1 = batch.preactivations(p1.W, 1)
    H1 = np.where(Z1 >= 0, Z1, p1.prelu_slope * Z1)
    h = H1[:, 0, :]
    s = np.einsum("bk,bkd->bd", batch.R1, H1)
    if p2 is None:
        return h, s
    Z2 = batch.preactivations(p2.W, 2)
    H2 = np.where(Z2 >= 0, Z2, p2.prelu_slope * Z2)
    s_plain = np.einsum("bk,bkd->bd", batch.R2, H2)
    return Z1, Z2, h, s, s_plain


def _hinge_args(pos, n1, n2, cfg: TrainConfig):
    sp, s1, s2 = sigmoid(pos), sigmoid(n1), sigmoid(n2)
    if cfg.hinge == "printed":
        return sp - s1 + cfg.phi, sp - s2 + cfg.varphi
    return s1 - sp + cfg.phi, s2 - sp + cfg.varphi


def forward(batch: SubgraphBatch, p1: EncoderParams, p2: EncoderParams, perm, cfg: TrainConfig) -> Forward:
    Z1, Z2, h, s, s_plain = encode(batch, p1, p2)
    perm = np.asarray(perm)
    s_shuf = s[perm]
    pos = np.einsum("bd,bd->b", h, s)
    n1 = np.einsum("bd,bd->b", h, s_shuf)
    n2 = np.einsum("bd,bd->b", h, s_plain)
    g1, g2 = _hinge_args(pos, n1, n2, cfg)
    sign = -1.0 if cfg.hinge == "printed" else 1.0
    L1 = sign * float(np.mean(np.maximum(g1, 0.0)))
    L2 = sign * float(np.mean(np.maximum(g2, 0.0)))
    return Forward(Z1, Z2, h, s, s_shuf, s_plain, perm, L1 + cfg.lam * L2, L1, L2)


@dataclass
class Gradients:
    dW1: np.ndarray
    dW2: np.ndarray
    da1: float
    da2: float

    def as_dict(self) -> dict:
        return {"W1": self.dW1, "W2": self.dW2, "a1": np.asarray(self.da1), "a2": np.asarray(self.da2)}


def compute_gradients(batch: SubgraphBatch, p1: EncoderParams, p2: EncoderParams,
                      fw: Forward | None, cfg: TrainConfig) -> Gradients:
    """Exact gradient of the batch loss w.r.t. both weight tables and PReLU slopes."""
    if fw is None:
        raise ValueError("compute_gradients needs the forward cache")
    B = len(batch)
    pos = np.einsum("bd,bd->b", fw.h, fw.s)
    n1 = np.einsum("bd,bd->b", fw.h, fw.s_shuf)
    n2 = np.einsum("bd,bd->b", fw.h, fw.s_plain)
    g1, g2 = _hinge_args(pos, n1, n2, cfg)
    act1 = (g1 > 0).astype(float)
    act2 = (g2 > 0).astype(float) * cfg.lam
    dsig = lambda x: sigmoid(x) * (1.0 - sigmoid(x))  # noqa: E731
    # both hinge forms differentiate to the same expressions; only the active sets differ
    g_pos = -(act1 + act2) * dsig(pos) / B
    g_n1 = act1 * dsig(n1) / B
    g_n2 = act2 * dsig(n2) / B

    dh = g_pos[:, None] * fw.s + g_n1[:, None] * fw.s_shuf + g_n2[:, None] * fw.s_plain
    ds = g_pos[:, None] * fw.h
    np.add.at(ds, fw.perm, g_n1[:, None] * fw.h)
    ds_plain = g_n2[:, None] * fw.h

    dH1 = batch.R1[:, :, None] * ds[:, None, :]
    dH1[:, 0, :] += dh
    dH2 = batch.R2[:, :, None] * ds_plain[:, None, :]

    dW1, da1 = _gcn_backward(batch.M1T, fw.Z1, dH1, p1)
    dW2, da2 = _gcn_backward(batch.M2T, fw.Z2, dH2, p2)
    return Gradients(dW1, dW2, da1, da2)


def _gcn_backward(MT, Z, dH, params: EncoderParams):
    da = float(np.sum(dH * np.minimum(Z, 0.0)))
    dZ = dH * np.where(Z < 0, params.prelu_slope, 1.0)
    return MT @ dZ.reshape(-1, Z.shape[2]), da


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """In-place bias-corrected Adam update; every entry's moments decay each step."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for key, p in params.items():
        g = np.asarray(grads[key], dtype=float)
        if g.shape != np.shape(p):
            raise ValueError(f"gradient shape {g.shape} does not match parameter {key} {np.shape(p)}")
        if key not in state.m:
            state.m[key] = np.zeros_like(g)
            state.v[key] = np.zeros_like(g)
        m, v = state.m[key], state.v[key]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


@dataclass
class TrainResult:
    params1: EncoderParams
    params2: EncoderParams
    embeddings: np.ndarray
    history: list = field(default_factory=list)  # (epoch, L, L1, L2, ms, val_auc)


def _as_tensors(p1: EncoderParams, p2: EncoderParams) -> dict:
    return {"W1": p1.W, "W2": p2.W, "a1": np.array(p1.prelu_slope), "a2": np.array(p2.prelu_slope)}


def embed(batch: SubgraphBatch, p1: EncoderParams) -> np.ndarray:
    h, _ = encode(batch, p1)
    return h


def train(subgraphs: Sequence[TemporalSubgraph], n: int, cfg: TrainConfig,
          monitor: Callable[[np.ndarray], float] | None = None,
          log_file=None, stream=None) -> TrainResult:
    """Fit both encoders on one subgraph per node and return center embeddings.

    ``monitor`` maps the current embedding table to a validation score; when
    given, training stops after ``cfg.patience`` epochs without improvement
    and the best-scoring parameters are kept.
    """
    if len(subgraphs) != n or any(s is None for s in subgraphs):
        raise ValueError(f"need one subgraph per node ({n}), got {len(subgraphs)}")
    rng = np.random.default_rng(cfg.seed)
    p1 = EncoderParams.init(n, cfg.dim, rng)
    p2 = EncoderParams.init(n, cfg.dim, rng)
    if cfg.shared_encoder:
        p2 = p1
    full = SubgraphBatch(subgraphs, cfg.beta, cfg.time_readout, cfg.time_weights, n=n)
    order = np.argsort(full.centers, kind="stable")
    state = AdamState()
    tensors = _as_tensors(p1, p2)
    history = []
    best = (-np.inf, None)
    stale = 0

    def emit(row):
        line = "\t".join(str(x) for x in row)
        if stream is not None:
            print(line, file=stream, flush=True)
        if log_file is not None:
            log_file.write(line + "\n")

    for epoch in range(1, cfg.epochs + 1):
        start = time.perf_counter()
        if cfg.batch_size and cfg.batch_size < n:
            rows = rng.permutation(n)
            chunks = [rows[i:i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]
        else:
            chunks = [np.arange(n)]
        sums = np.zeros(3)
        for rows in chunks:
            batch = full if len(rows) == n else full.take(rows)
            perm = rng.permutation(len(rows))
            fw = forward(batch, p1, p2, perm, cfg)
            if not np.isfinite(fw.L):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}: L1={fw.L1} L2={fw.L2}")
            grads = compute_gradients(batch, p1, p2, fw, cfg)
            if cfg.shared_encoder:
                grads = Gradients(grads.dW1 + grads.dW2, grads.dW1 * 0, grads.da1 + grads.da2, 0.0)
            adam_step(tensors, grads.as_dict(), state, cfg.lr)
            p1.prelu_slope = float(tensors["a1"])
            if not cfg.shared_encoder:
                p2.prelu_slope = float(tensors["a2"])
            sums += np.array([fw.L, fw.L1, fw.L2]) * len(rows)
        L, L1, L2 = sums / n
        ms = int(round((time.perf_counter() - start) * 1000))
        score = None
        if monitor is not None:
            score = float(monitor(embed(full, p1)[order]))
        history.append((epoch, float(L), float(L1), float(L2), ms, score))
        emit((epoch, f"{L:.6f}", f"{L1:.6f}", f"{L2:.6f}", ms, "" if score is None else f"{score:.6f}"))
        if score is not None:
            if score > best[0]:
                best = (score, (p1.copy(), p2.copy()))
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    logger.info("early stop at epoch %d", epoch)
                    break

    if best[1] is not None:
        p1, p2 = best[1]
    emb = embed(full, p1)[order]
    return TrainResult(p1, p2, emb, history)

