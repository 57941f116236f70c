"""Exact optimum and credible-set enumeration over merged score tables.

The optimum comes from the best-sink dynamic programme over variable subsets.
Credible networks are then enumerated depth-first, bounding each branch by
the sum of the best entries of the still unassigned nodes.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import (
    SCORE_SLACK,
    CapacityError,
    CredibleSet,
    Network,
    ScoreTable,
    canonicalize,
    is_acyclic,
    parent_mask,
)

DP_LIMIT = 24
DEFAULT_MAX_NETWORKS = 100_000

__all__ = ["optimal_score", "enumerate_credible", "is_acyclic", "DP_LIMIT", "DEFAULT_MAX_NETWORKS"]


def _check_size(tables: ScoreTable, limit: int) -> None:
    if tables.n > limit:
        raise CapacityError(f"{tables.n} variables exceed the subset-DP limit of {limit}")


def _best_parent_scores(tables: ScoreTable) -> np.ndarray:
    """``best[v, W]``: lowest entry of node v whose parents are a subset of mask W."""
    n = tables.n
    size = 1 << n
    best = np.full((n, size), np.inf)
    for v in range(n):
        row = best[v]
        for e in tables[v]:
            m = e.mask
            if e.score < row[m]:
                row[m] = e.score
        # superset closure, one bit at a time
        for b in range(n):
            view = row.reshape(-1, 2, 1 << b)
            np.minimum(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
    return best


def optimal_score(tables: ScoreTable, limit: int = DP_LIMIT) -> float:
    _check_size(tables, limit)
    n = tables.n
    size = 1 << n
    bps = _best_parent_scores(tables)
    best = np.full(size, np.inf)
    best[0] = 0.0
    masks = np.arange(size)
    popcount = np.zeros(size, dtype=np.int64)
    for b in range(n):
        popcount += (masks >> b) & 1
    for k in range(1, n + 1):
        layer = masks[popcount == k]
        acc = np.full(len(layer), np.inf)
        for v in range(n):
            bit = 1 << v
            has = (layer & bit) != 0
            S = layer[has]
            rest = S ^ bit
            np.minimum.at(acc, np.nonzero(has)[0], bps[v, rest] + best[rest])
        best[layer] = acc
    opt = float(best[size - 1])
    if not math.isfinite(opt):
        raise ValueError("score tables admit no acyclic network")
    return opt


def enumerate_credible(
    tables: ScoreTable,
    epsilon: float,
    max_networks: Optional[int] = DEFAULT_MAX_NETWORKS,
    limit: int = DP_LIMIT,
    opt: Optional[float] = None,
) -> CredibleSet:
    """All acyclic per-node choices scoring at most OPT + epsilon.

    ``max_networks=None`` removes the cap; otherwise enumeration stops once
    more than ``max_networks`` networks are found and the result is flagged
    truncated. Networks are returned sorted by score, then canonical key.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if opt is None:
        opt = optimal_score(tables, limit)
    else:
        _check_size(tables, limit)
    n = tables.n
    bound = opt + epsilon + SCORE_SLACK

    # fixed node order: most constrained (fewest entries) first
    order = sorted(range(n), key=lambda v: (len(tables[v]), v))
    cands = [[(e, e.mask) for e in tables[v]] for v in range(n)]
    mins = [tables[v][0].score for v in range(n)]
    rest_lb = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        rest_lb[i] = rest_lb[i + 1] + mins[order[i]]

    # anc[v]: mask of ancestors of v among assigned nodes (v's parents, transitively)
    chosen = [None] * n
    found: dict = {}
    truncated = False

    def creates_cycle(v, pmask, anc):
        # v becomes a descendant of pmask nodes; cycle iff some parent already has v as ancestor
        m = pmask
        while m:
            low = m & -m
            p = low.bit_length() - 1
            if anc[p] >> v & 1:
                return True
            m ^= low
        return False

    def add_edges(v, pmask, anc):
        new_anc = list(anc)
        v_anc = pmask
        m = pmask
        while m:
            low = m & -m
            v_anc |= anc[low.bit_length() - 1]
            m ^= low
        new_anc[v] = v_anc
        vbit = 1 << v
        for u in range(n):
            if anc[u] & vbit:
                new_anc[u] |= v_anc
        return new_anc

    def dfs(i, partial, anc):
        nonlocal truncated
        if truncated:
            return
        if i == n:
            net = Network(tables.names, tuple(chosen))
            key = canonicalize(net)
            if key not in found:
                found[key] = net
                if max_networks is not None and len(found) > max_networks:
                    truncated = True
            return
        v = order[i]
        remaining = rest_lb[i + 1]
        for e, pmask in cands[v]:
            total = partial + e.score
            if total + remaining > bound:
                break  # entries are sorted ascending
            if creates_cycle(v, pmask, anc):
                continue
            chosen[v] = e
            dfs(i + 1, total, add_edges(v, pmask, anc))
            chosen[v] = None
            if truncated:
                return

    dfs(0, 0.0, [0] * n)
    nets = sorted(found.values(), key=lambda net: (net.score, canonicalize(net)))
    if truncated:
        nets = nets[:max_networks]
    return CredibleSet(float(epsilon), float(opt), tuple(nets), truncated)
