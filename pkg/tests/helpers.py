"""Fixtures shared by the unit and acceptance tests."""

import numpy as np

from dysubc.encoder import EncoderParams
from dysubc.graph import TemporalEvent, build_graph
from dysubc.sampler import SamplerConfig, sample_subgraph
from dysubc.trainer import SubgraphBatch, TrainConfig, compute_gradients, forward


def two_layer_golden_graph():
    """Center 0, first-order 1-4, second-order 5-15, leaves hanging off some second-order nodes.

    With alpha=1 the second-order scores are degree + recency. Nodes 7 (deg 4),
    5 and 12 (deg 3) lead on degree; 9, 10 and 14 tie at degree 2 and are
    separated by recency (9 newest, then 10, then 14); the rest have degree 1.
    """
    ev = []
    t = iter(range(100, 10_000, 7))
    for f in (1, 2, 3, 4):
        ev.append(TemporalEvent(0, f, float(next(t))))
    for j in range(5, 16):
        ev.append(TemporalEvent(1 + (j - 5) % 4, j, float(next(t))))
    leaf = 16
    extra = {7: 3, 5: 2, 12: 2, 9: 1, 10: 1, 14: 1}
    leaf_time = {7: 500.0, 5: 400.0, 12: 450.0, 9: 9000.0, 10: 5000.0, 14: 1.0}
    for j, count in extra.items():
        for _ in range(count):
            ev.append(TemporalEvent(j, leaf, leaf_time[j]))
            leaf += 1
    return build_graph(ev)


def toy_graph(seed, n=30, m=90):
    rng = np.random.default_rng(seed)
    events = []
    for u, v in rng.integers(0, n, size=(m, 2)):
        if u != v:
            events.append(TemporalEvent(int(u), int(v), float(rng.uniform(0, 100))))
    for u in range(n):  # no isolated nodes
        events.append(TemporalEvent(u, (u + 1) % n, float(rng.uniform(0, 100))))
    return build_graph(events, n=n)


def gradcheck_case(seed, shared, hinge="printed", lam=0.5):
    """Max relative error of analytic vs central-difference gradients on a 3-subgraph batch."""
    rng = np.random.default_rng(seed)
    g = toy_graph(seed)
    centers = rng.choice(g.n, size=3, replace=False)
    subs = [sample_subgraph(g, int(c), SamplerConfig(k=8, alpha=1.0)) for c in centers]
    cfg = TrainConfig(lam=lam, hinge=hinge, shared_encoder=shared)
    batch = SubgraphBatch(subs, cfg.beta, n=g.n)
    p1 = EncoderParams(rng.normal(size=(g.n, 5)), float(rng.uniform(0.1, 0.4)))
    p2 = p1 if shared else EncoderParams(rng.normal(size=(g.n, 5)), float(rng.uniform(0.1, 0.4)))
    perm = rng.permutation(3)

    def loss():
        return forward(batch, p1, p2, perm, cfg).L

    gr = compute_gradients(batch, p1, p2, forward(batch, p1, p2, perm, cfg), cfg)
    if shared:
        analytic = {"W1": gr.dW1 + gr.dW2, "a1": gr.da1 + gr.da2}
    else:
        analytic = {"W1": gr.dW1, "W2": gr.dW2, "a1": gr.da1, "a2": gr.da2}
    eps = 1e-5
    worst = 0.0
    for key, grad in analytic.items():
        grad = np.atleast_1d(np.asarray(grad, dtype=float))
        target = {"W1": p1.W, "W2": p2.W}.get(key)
        numeric = np.zeros_like(grad)
        if target is None:
            p = p1 if key == "a1" else p2
            base = p.prelu_slope
            p.prelu_slope = base + eps
            up = loss()
            p.prelu_slope = base - eps
            down = loss()
            p.prelu_slope = base
            numeric[0] = (up - down) / (2 * eps)
        else:
            rows = np.unique(np.concatenate([s.nodes for s in subs]))
            # untouched rows must carry exactly zero gradient
            mask = np.ones(len(target), bool)
            mask[rows] = False
            assert not grad[mask].any()
            for r in rows:
                for c in range(target.shape[1]):
                    base = target[r, c]
                    target[r, c] = base + eps
                    up = loss()
                    target[r, c] = base - eps
                    down = loss()
                    target[r, c] = base
                    numeric[r, c] = (up - down) / (2 * eps)
        err = np.abs(grad - numeric) / np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), 1e-6)
        worst = max(worst, float(err.max()))
    return worst
