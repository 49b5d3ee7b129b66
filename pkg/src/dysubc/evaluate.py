"""Link-prediction evaluation: edge features, logistic regression, AUC/accuracy, ablations."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import check_binary_labels, check_pairs
from .estimator import DySubC, parse_variant
from .graph import EdgeSplit, TemporalEvent, TemporalGraph, build_graph, sample_negatives, temporal_split


@dataclass
class EvalReport:
    auc: float
    accuracy: float
    n_pos: int
    n_neg: int
    seed: int
    variant: str = "full"
    val_auc: float = float("nan")
    l2: float = float("nan")

    def as_dict(self) -> dict:
        return asdict(self)


def edge_feature(h_u, h_v) -> np.ndarray:
    h_u = np.asarray(h_u, dtype=float)
    h_v = np.asarray(h_v, dtype=float)
    if h_u.shape != h_v.shape:
        raise ValueError(f"embedding shapes differ: {h_u.shape} vs {h_v.shape}")
    return h_u * h_v


def auc(scores, labels) -> float:
    """Rank-based ROC AUC; tied scores count half."""
    scores = np.asarray(scores, dtype=float)
    labels = check_binary_labels(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if len(scores) == 0:
        raise ValueError("empty input")
    return float(np.mean((scores >= threshold).astype(int) == labels))


def _logistic_objective(w, b, X, y, l2):
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w)
    return loss, z


class LinkLogisticRegression(ClassifierMixin, BaseEstimator):
    """L2-regularized logistic regression solved by damped Newton steps.

    Minimizes ``mean(log-loss) + l2/2 * ||w||^2``; the bias is not penalized.
    Starts from zero, so results are deterministic.
    """

    def __init__(self, l2=1e-4, max_iter=500, tol=1e-12):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        y = check_binary_labels(y).astype(float)
        n, d = X.shape
        Xb = np.hstack([X, np.ones((n, 1))])
        theta = np.zeros(d + 1)
        reg = np.full(d + 1, self.l2)
        reg[-1] = 0.0
        obj, z = _logistic_objective(theta[:-1], theta[-1], X, y, self.l2)
        self.n_iter_ = 0
        for it in range(self.max_iter):
            p = expit(z)
            grad = Xb.T @ (p - y) / n + reg * theta
            hess = (Xb * (p * (1 - p))[:, None]).T @ Xb / n + np.diag(reg)
            hess[np.diag_indices_from(hess)] += 1e-12
            step = np.linalg.solve(hess, grad)
            decrement = float(grad @ step)
            self.n_iter_ = it + 1
            if decrement / 2.0 <= self.tol:
                break
            t = 1.0
            while True:
                cand = theta - t * step
                new_obj, new_z = _logistic_objective(cand[:-1], cand[-1], X, y, self.l2)
                if new_obj <= obj - 0.25 * t * decrement or t < 1e-10:
                    break
                t *= 0.5
            theta, obj, z = cand, new_obj, new_z
        self.coef_ = theta[:-1].copy()
        self.intercept_ = float(theta[-1])
        self.classes_ = np.array([0, 1])
        self.objective_ = float(obj)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


def fit_logreg(features, labels, l2: float = 1e-4, iters: int = 500) -> tuple[np.ndarray, float]:
    model = LinkLogisticRegression(l2=l2, max_iter=iters).fit(features, labels)
    return model.coef_, model.intercept_


def pair_features(embeddings: np.ndarray, pairs) -> np.ndarray:
    arr = check_pairs(pairs, len(embeddings))
    return edge_feature(embeddings[arr[:, 0]], embeddings[arr[:, 1]])


@dataclass
class LinkData:
    """Everything one link-prediction run needs: the train-only graph, the full graph, and the split."""

    train_graph: TemporalGraph
    full_graph: TemporalGraph
    split: EdgeSplit


def prepare_link_data(events: Sequence[TemporalEvent], seed: int = 0,
                      fractions=(0.75, 0.10, 0.15), n: int | None = None) -> LinkData:
    """Split chronologically and draw held-out negatives against the full graph."""
    full = build_graph(events, n=n)
    split = temporal_split(events, fractions, seed=seed)
    negs = sample_negatives(full, len(split.val_pos) + len(split.test_pos), seed=seed)
    split.val_neg = negs[:len(split.val_pos)]
    split.test_neg = negs[len(split.val_pos):]
    train_graph = build_graph(split.train_pos, n=full.n)
    return LinkData(train_graph=train_graph, full_graph=full, split=split)


def run_link_prediction(embeddings, split: EdgeSplit, full_graph: TemporalGraph, seed: int = 0,
                        l2_grid=(1e-4, 1e-2, 1.0), variant: str = "full") -> EvalReport:
    """Train a classifier on train edges plus fresh negatives, select by val AUC, score on test."""
    embeddings = np.asarray(embeddings, dtype=float)
    for name in ("train_pos", "val_pos", "test_pos"):
        pairs = [(e[0], e[1]) for e in getattr(split, name)]
        if pairs and np.max(pairs) >= len(embeddings):
            raise IndexError(f"{name} references a node missing from the embedding table")
    if not split.test_pos or not split.test_neg:
        raise ValueError("split has no test pairs")
    held_out = list(split.val_neg) + list(split.test_neg)
    train_neg = sample_negatives(full_graph, len(split.train_pos), seed=np.random.default_rng([seed, 1]),
                                 exclude=held_out)
    X_train = np.vstack([pair_features(embeddings, split.train_pos), pair_features(embeddings, train_neg)])
    y_train = np.r_[np.ones(len(split.train_pos)), np.zeros(len(train_neg))]

    best = None
    if split.val_pos and split.val_neg and len(l2_grid) > 1:
        X_val = np.vstack([pair_features(embeddings, split.val_pos), pair_features(embeddings, split.val_neg)])
        y_val = np.r_[np.ones(len(split.val_pos)), np.zeros(len(split.val_neg))]
        for l2 in l2_grid:
            model = LinkLogisticRegression(l2=l2).fit(X_train, y_train)
            score = auc(model.decision_function(X_val), y_val)
            if best is None or score > best[0]:
                best = (score, l2, model)
    else:
        best = (float("nan"), l2_grid[0], LinkLogisticRegression(l2=l2_grid[0]).fit(X_train, y_train))
    val_auc, l2, model = best

    X_test = np.vstack([pair_features(embeddings, split.test_pos), pair_features(embeddings, split.test_neg)])
    y_test = np.r_[np.ones(len(split.test_pos)), np.zeros(len(split.test_neg))]
    prob = model.predict_proba(X_test)[:, 1]
    return EvalReport(auc=auc(prob, y_test), accuracy=accuracy(prob, y_test),
                      n_pos=len(split.test_pos), n_neg=len(split.test_neg), seed=seed,
                      variant=variant, val_auc=float(val_auc), l2=float(l2))


def run_ablation(events: Sequence[TemporalEvent], params: dict, variants=("full",), seeds=(0,),
                 n: int | None = None) -> list[EvalReport]:
    """Train and evaluate every ``(variant, seed)`` pair independently.

    ``params`` holds :class:`~dysubc.estimator.DySubC` keyword arguments; the
    seed of each run drives both the data split and the model.
    """
    for v in variants:
        parse_variant(v)
    reports = []
    for seed in seeds:
        data = prepare_link_data(events, seed=seed, n=n)
        for v in variants:
            model = DySubC(**{**params, "variant": v, "seed": seed}).fit(data.train_graph)
            reports.append(run_link_prediction(model.embeddings_, data.split, data.full_graph,
                                               seed=seed, variant=v))
    return reports


def summarize(reports: Sequence[EvalReport]) -> dict[str, dict[str, float]]:
    """Mean and standard deviation of AUC and accuracy per variant."""
    out: dict[str, dict[str, float]] = {}
    for v in dict.fromkeys(r.variant for r in reports):
        rows = [r for r in reports if r.variant == v]
        aucs = np.array([r.auc for r in rows])
        accs = np.array([r.accuracy for r in rows])
        out[v] = {"auc_mean": float(aucs.mean()), "auc_std": float(aucs.std()),
                  "acc_mean": float(accs.mean()), "acc_std": float(accs.std()), "runs": len(rows)}
    return out
