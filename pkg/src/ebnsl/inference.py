"""Exact inference by variable elimination on binary networks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Cpt, InconsistentEvidence, Network, NoisyOrParams, Rep
from .noisyor import expand_cpt


@dataclass(frozen=True)
class Factor:
    """Table over binary variables; axis i of ``table`` is ``variables[i]``."""

    variables: tuple
    table: np.ndarray

    def reduce(self, evidence: Mapping[int, int]) -> "Factor":
        idx = []
        keep = []
        for v in self.variables:
            if v in evidence:
                idx.append(evidence[v])
            else:
                idx.append(slice(None))
                keep.append(v)
        return Factor(tuple(keep), self.table[tuple(idx)])

    def sum_out(self, var: int) -> "Factor":
        ax = self.variables.index(var)
        return Factor(self.variables[:ax] + self.variables[ax + 1 :], self.table.sum(axis=ax))


def multiply(factors: Sequence[Factor]) -> Factor:
    scope = []
    for f in factors:
        for v in f.variables:
            if v not in scope:
                scope.append(v)
    letters = {v: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i, v in enumerate(scope)}
    spec = ",".join("".join(letters[v] for v in f.variables) for f in factors)
    out = "".join(letters[v] for v in scope)
    return Factor(tuple(scope), np.einsum(f"{spec}->{out}", *[f.table for f in factors]))


def node_cpt(network: Network, node: int) -> Cpt:
    params = network.nodes[node].representation.params
    if isinstance(params, NoisyOrParams):
        return expand_cpt(params)
    if params is None:
        raise ValueError(f"node {network.names[node]} has no CPT parameters attached")
    return params


def cpt_factor(child: int, parents: Sequence[int], cpt: Cpt) -> Factor:
    k = len(parents)
    theta = cpt.as_array()
    # row j -> axes (bit k-1, ..., bit 0, child); reorder to (parent 0, ..., parent k-1, child)
    table = theta.reshape((2,) * k + (2,))
    table = np.transpose(table, tuple(range(k - 1, -1, -1)) + (k,))
    return Factor(tuple(parents) + (child,), np.ascontiguousarray(table))


def to_factor_network(network: Network) -> list:
    return [cpt_factor(v, network.parents_of(v), node_cpt(network, v)) for v in range(network.n)]


def min_degree_order(factors: Sequence[Factor], eliminate: Sequence[int]) -> list:
    """Greedy elimination order: fewest neighbours in the interaction graph first."""
    graph: dict = {}
    for f in factors:
        for v in f.variables:
            graph.setdefault(v, set()).update(u for u in f.variables if u != v)
    remaining = set(eliminate)
    order = []
    while remaining:
        v = min(remaining, key=lambda u: (len(graph.get(u, ())), u))
        nbrs = graph.pop(v, set())
        for a in nbrs:
            graph[a] |= nbrs - {a}
            graph[a].discard(v)
        order.append(v)
        remaining.discard(v)
    return order


def joint_marginal(
    network: Network, evidence: Mapping[int, int], keep: Sequence[int], order: Optional[Sequence[int]] = None
) -> Factor:
    """Unnormalised P(keep, evidence) as a factor over ``keep``."""
    factors = [f.reduce(evidence) for f in to_factor_network(network)]
    drop = [v for v in range(network.n) if v not in evidence and v not in keep]
    if order is None:
        order = min_degree_order(factors, drop)
    elif sorted(order) != sorted(drop):
        raise ValueError("elimination order must cover exactly the non-query, non-evidence variables")
    for var in order:
        touched = [f for f in factors if var in f.variables]
        if not touched:
            continue
        factors = [f for f in factors if var not in f.variables]
        factors.append(multiply(touched).sum_out(var))
    result = multiply(factors) if factors else Factor((), np.array(1.0))
    perm = [result.variables.index(v) for v in keep]
    return Factor(tuple(keep), np.transpose(result.table, perm))


def posterior(
    network: Network, evidence: Mapping[int, int], query: int, order: Optional[Sequence[int]] = None
) -> np.ndarray:
    """P(query | evidence) as ``array([p0, p1])``."""
    evidence = {int(k): int(v) for k, v in evidence.items()}
    if query in evidence:
        raise ValueError("query variable is part of the evidence")
    for v, val in evidence.items():
        if not 0 <= v < network.n or val not in (0, 1):
            raise ValueError(f"bad evidence {v}={val}")
    table = joint_marginal(network, evidence, [query], order).table
    z = table.sum()
    if not z > 0:
        raise InconsistentEvidence("evidence has zero probability under the network")
    return table / z


def representation_counts(network: Network) -> dict:
    return {
        "table": sum(e.rep is Rep.FULL_CPT for e in network.nodes),
        "noisy-or": sum(e.rep is Rep.NOISY_OR for e in network.nodes),
    }
