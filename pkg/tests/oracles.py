"""Brute-force reference implementations used by the tests.

Nothing here calls the package's counting, search or inference code; the
oracles work from first principles (row scans, enumeration of all DAGs,
full joint tables, finite differences).
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from ebnsl.core import Cpt, LocalScore, Network, NoisyOrParams, Rep, Representation, ScoreTable


def naive_counts(values, child, parents):
    """Row-by-row count of (configuration, child value)."""
    k = len(parents)
    table = [[0, 0] for _ in range(2**k)]
    for row in values:
        j = sum(int(row[p]) << pos for pos, p in enumerate(parents))
        table[j][int(row[child])] += 1
    return np.array(table)


@lru_cache(maxsize=None)
def all_dags(n):
    """Every labeled DAG on n nodes as a tuple of parent bitmasks."""
    dags = set()
    for perm in itertools.permutations(range(n)):
        choices = []
        for pos, v in enumerate(perm):
            preds = perm[:pos]
            opts = []
            for r in range(len(preds) + 1):
                for sub in itertools.combinations(preds, r):
                    opts.append(sum(1 << p for p in sub))
            choices.append((v, opts))
        for combo in itertools.product(*[c[1] for c in choices]):
            masks = [0] * n
            for (v, _), m in zip(choices, combo):
                masks[v] = m
            dags.add(tuple(masks))
    return tuple(sorted(dags))


def brute_force_credible(table: ScoreTable, epsilon: float, slack: float = 1e-9):
    """(OPT, set of canonical keys within OPT + epsilon) over all labeled DAGs."""
    n = table.n
    by_mask = []
    for v in range(n):
        d = {}
        for e in table[v]:
            d.setdefault(sum(1 << p for p in e.parents), []).append(e)
        by_mask.append(d)
    scored = []
    for dag in all_dags(n):
        options = []
        for v in range(n):
            opts = by_mask[v].get(dag[v])
            if not opts:
                break
            options.append(opts)
        else:
            for combo in itertools.product(*options):
                scored.append((math.fsum(e.score for e in combo), combo))
    opt = min(s for s, _ in scored)
    keys = {
        tuple((e.parents, e.rep.value) for e in combo) for s, combo in scored if s <= opt + epsilon + slack
    }
    return opt, keys


def random_score_table(rng, n, entries_per_node=5, noisy_share=0.3):
    """Random table: each node gets the empty set plus random parent sets."""
    names = tuple(f"V{i}" for i in range(n))
    entries = []
    for v in range(n):
        others = [u for u in range(n) if u != v]
        node = [LocalScore(v, (), Representation(Rep.FULL_CPT), float(rng.uniform(20, 30)))]
        seen = {((), "T")}
        for _ in range(entries_per_node - 1):
            k = int(rng.integers(1, len(others) + 1))
            ps = tuple(sorted(rng.choice(others, size=k, replace=False).tolist()))
            if rng.random() < noisy_share:
                rep = Representation(Rep.NOISY_OR, NoisyOrParams((0.5,) * k))
            else:
                rep = Representation(Rep.FULL_CPT)
            if (ps, rep.tag.value) in seen:
                continue
            seen.add((ps, rep.tag.value))
            # round to create occasional ties
            node.append(LocalScore(v, ps, rep, float(np.round(rng.uniform(10, 30), 1))))
        entries.append(tuple(node))
    return ScoreTable(names, tuple(entries))


def random_network(rng, n, max_parents=3, noisy_share=0.4):
    """Random DAG (parents drawn among lower-numbered nodes of a random order)."""
    order = rng.permutation(n)
    nodes = []
    for pos, v in enumerate(order):
        preds = order[:pos]
        k = int(rng.integers(0, min(max_parents, len(preds)) + 1))
        ps = tuple(sorted(int(x) for x in rng.choice(preds, size=k, replace=False))) if k else ()
        if ps and rng.random() < noisy_share:
            rep = Representation(Rep.NOISY_OR, NoisyOrParams(tuple(rng.uniform(0.05, 0.95, size=k))))
        else:
            p1 = rng.uniform(0.05, 0.95, size=2**k)
            rep = Representation(Rep.FULL_CPT, Cpt(tuple(zip(1 - p1, p1))))
        nodes.append(LocalScore(int(v), ps, rep, 0.0))
    return Network(tuple(f"V{i}" for i in range(n)), tuple(nodes))


def cpt_rows(entry: LocalScore):
    """P(child=0|j) rows straight from the parameters (noisy-OR by explicit product)."""
    params = entry.representation.params
    k = len(entry.parents)
    if isinstance(params, NoisyOrParams):
        rows = []
        for j in range(2**k):
            p0 = 1.0
            for pos in range(k):
                if j >> pos & 1:
                    p0 *= params.q[pos]
            rows.append((p0, 1 - p0))
        return rows
    return list(params.rows)


def joint_distribution(network: Network):
    """Dict assignment tuple -> probability, by enumerating all 2**n states."""
    n = network.n
    rows = [cpt_rows(e) for e in network.nodes]
    joint = {}
    for x in itertools.product((0, 1), repeat=n):
        p = 1.0
        for v, e in enumerate(network.nodes):
            j = sum(x[par] << pos for pos, par in enumerate(e.parents))
            p *= rows[v][j][x[v]]
        joint[x] = p
    return joint


def enumeration_posterior(network: Network, evidence: dict, query: int):
    joint = joint_distribution(network)
    num = [0.0, 0.0]
    for x, p in joint.items():
        if all(x[v] == val for v, val in evidence.items()):
            num[x[query]] += p
    z = num[0] + num[1]
    return np.array(num) / z


def central_difference(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (f(up) - f(dn)) / (2 * h)
    return g


def random_feasible_counts(rng, k, scale=200):
    """Counts over k parents with no child=1 record at the all-zero configuration."""
    table = rng.integers(0, scale, size=(2**k, 2))
    table[0, 1] = 0
    table[1:, 0] += 1  # keep every active configuration informative
    return table
