"""Synthetic temporal graphs with a planted recency signal."""

from __future__ import annotations

import numpy as np

from .graph import TemporalEvent


def drifting_communities(n: int = 500, n_events: int = 6000, n_communities: int = 10,
                         switch_frac: float = 0.8, closure: float = 0.5, seed: int = 0):
    """Events from communities whose membership changes mid-stream.

    Every node starts in one community; a ``switch_frac`` share of nodes moves
    to a different community at a random time in the first half of the
    stream. Partners are drawn either by closing a triangle through one of
    the node's five most recent partners (probability ``closure``) or
    uniformly from the node's current community. Late links therefore follow
    recent neighbours, while the early history points at stale communities.

    Returns events sorted by time with timestamps in ``[0, 1000)``. A draw
    whose node is alone in its community is dropped, so small graphs may
    yield slightly fewer than ``n_events`` events.
    """
    rng = np.random.default_rng(seed)
    old = rng.integers(0, n_communities, size=n)
    new = old.copy()
    movers = rng.random(n) < switch_frac
    shift = rng.integers(1, n_communities, size=n)
    new[movers] = (old[movers] + shift[movers]) % n_communities
    switch_at = rng.uniform(0.05, 0.5, size=n)

    times = np.sort(rng.uniform(0.0, 1.0, size=n_events))
    recent: list[list[int]] = [[] for _ in range(n)]
    events = []
    for t in times:
        member = np.where(t < switch_at, old, new)
        u = int(rng.integers(n))
        v = -1
        if recent[u] and rng.random() < closure:
            w = recent[u][rng.integers(len(recent[u]))]
            options = [x for x in recent[w] if x != u]
            if options:
                v = options[rng.integers(len(options))]
        if v < 0:
            pool = np.flatnonzero(member == member[u])
            pool = pool[pool != u]
            if len(pool) == 0:
                continue
            v = int(pool[rng.integers(len(pool))])
        events.append(TemporalEvent(u, v, float(t * 1000.0)))
        for a, b in ((u, v), (v, u)):
            if b in recent[a]:
                recent[a].remove(b)
            recent[a].append(b)
            del recent[a][:-5]
    return events
