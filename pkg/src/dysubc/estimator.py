"""scikit-learn style front end for sampling + contrastive training."""

from __future__ import annotations

import sys

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_node_index, check_temporal_graph
from .graph import TemporalGraph
from .sampler import SamplerConfig, sample_all
from .trainer import TrainConfig, train

VARIANTS = ("full", "-R", "-N-R", "-S-N-R")


def parse_variant(label: str) -> dict:
    """Translate an ablation label like ``-S-N-R`` into component switches.

    ``-S`` ranks candidates by degree alone, ``-N`` drops the unweighted
    negative, ``-R`` replaces the influence readout with a mean.
    """
    if label == "full":
        return {"temporal_sampling": True, "temporal_negative": True, "time_readout": True}
    tokens = label.split("-")
    if tokens[0] != "" or len(tokens) < 2 or any(t not in ("S", "N", "R") for t in tokens[1:]) \
            or len(set(tokens[1:])) != len(tokens) - 1:
        raise ValueError(f"unknown variant {label!r}; expected 'full' or a combination of -S, -N, -R")
    off = set(tokens[1:])
    return {
        "temporal_sampling": "S" not in off,
        "temporal_negative": "N" not in off,
        "time_readout": "R" not in off,
    }


class DySubC(TransformerMixin, BaseEstimator):
    """Self-supervised node embeddings from temporal subgraph contrast.

    ``fit`` takes a :class:`~dysubc.graph.TemporalGraph`; ``transform`` maps
    node ids (or the whole graph) to rows of the learned embedding table.

    Parameters
    ----------
    k : int
        Subgraph size, center included.
    alpha : float
        Weight of degree against edge recency when ranking candidates.
    beta : float
        Weight of inverse hop distance against recency in the readout.
    lam : float
        Weight of the unweighted-subgraph negative term.
    phi, varphi : float
        Margins of the shuffled and unweighted negative terms.
    variant : str
        ``"full"`` or an ablation label such as ``"-S-N-R"``.
    time_weights : bool
        If False, edge recencies are erased and the first encoder sees the
        plain adjacency.
    shared_encoder : bool
        Use one weight table for both encoders. With separate tables the
        second encoder can lower the loss on its own by pushing its summary
        away from the center embedding.
    """

    def __init__(self, k=20, alpha=10.0, beta=1.6, lam=0.5, phi=0.75, varphi=0.75, lr=0.001,
                 epochs=800, dim=128, batch_size=0, seed=42, variant="full", time_weights=True,
                 hinge="printed", shared_encoder=True, patience=10, n_jobs=1, verbose=False):
        self.k = k
        self.alpha = alpha
        self.beta = beta
        self.lam = lam
        self.phi = phi
        self.varphi = varphi
        self.lr = lr
        self.epochs = epochs
        self.dim = dim
        self.batch_size = batch_size
        self.seed = seed
        self.variant = variant
        self.time_weights = time_weights
        self.hinge = hinge
        self.shared_encoder = shared_encoder
        self.patience = patience
        self.n_jobs = n_jobs
        self.verbose = verbose

    def sampler_config(self) -> SamplerConfig:
        flags = parse_variant(self.variant)
        return SamplerConfig(k=self.k, alpha=self.alpha,
                             use_time=flags["temporal_sampling"] and self.time_weights)

    def train_config(self) -> TrainConfig:
        flags = parse_variant(self.variant)
        return TrainConfig(
            k=self.k, alpha=self.alpha, beta=self.beta,
            lam=self.lam if flags["temporal_negative"] else 0.0,
            phi=self.phi, varphi=self.varphi, lr=self.lr, epochs=self.epochs,
            batch_size=self.batch_size, dim=self.dim, seed=self.seed,
            time_readout=flags["time_readout"], time_weights=self.time_weights,
            hinge=self.hinge, shared_encoder=self.shared_encoder, patience=self.patience,
        )

    def fit(self, X: TemporalGraph, y=None, subgraphs=None, monitor=None, log_file=None):
        g = check_temporal_graph(X)
        cfg = self.train_config()
        if subgraphs is None:
            subgraphs = sample_all(g, self.sampler_config(), n_jobs=self.n_jobs)
        result = train(subgraphs, g.n, cfg, monitor=monitor, log_file=log_file,
                       stream=sys.stdout if self.verbose else None)
        self.subgraphs_ = subgraphs
        self.params1_ = result.params1
        self.params2_ = result.params2
        self.embeddings_ = result.embeddings
        self.history_ = result.history
        self.n_nodes_ = g.n
        return self

    def transform(self, X):
        check_is_fitted(self, "embeddings_")
        if isinstance(X, TemporalGraph):
            if X.n != self.n_nodes_:
                raise ValueError(f"graph has {X.n} nodes, model was fit on {self.n_nodes_}")
            return self.embeddings_.copy()
        return self.embeddings_[check_node_index(X, self.n_nodes_)]
