"""Candidate parent-set enumeration with safe pruning, and per-node merging.

A candidate can be *safely pruned* when it cannot be a node's parent set in
any network scoring within epsilon of the optimum. Rules used here:

* subset rule: a strict subset scoring at least epsilon better prunes the superset;
* penalty rule: if a subset's score plus epsilon is below the superset's
  penalty, the superset and all of its supersets are pruned (BIC only);
* noisy-OR infeasibility: a record with child=1 and every candidate parent 0
  gives the noisy-OR zero likelihood;
* null-set rule: a noisy-OR whose penalty exceeds the empty set's full-CPT
  score plus epsilon is pruned, together with its supersets.

Every comparison is biased by ``SCORE_SLACK`` towards keeping the candidate.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

from .core import SCORE_SLACK, Dataset, LocalScore, Rep, ScoreTable, make_parent_set
from .cpt_scoring import bic_full, penalty_full
from .data import counts
from .noisyor import FitConfig, HotStartCache, bic_noisyor, is_feasible, penalty_noisyor

SUBSET = "subset"
PENALTY = "penalty"
INFEASIBLE = "infeasible"
NULL = "null"


def _penalty(rep: Rep, parents, N: int) -> float:
    return penalty_full(parents, N) if rep is Rep.FULL_CPT else penalty_noisyor(parents, N)


def prune_by_subset(sub: LocalScore, sup: LocalScore, epsilon: float) -> bool:
    """True when ``sup`` is dominated by its strict subset ``sub`` by at least epsilon."""
    if sub.child != sup.child:
        raise ValueError("scores belong to different nodes")
    if not set(sub.parents) < set(sup.parents):
        raise ValueError(f"{sub.parents} is not a strict subset of {sup.parents}")
    return sub.score + epsilon <= sup.score - SCORE_SLACK


def prune_supersets_by_penalty(sub: LocalScore, parents, N: int, epsilon: float, rep: Rep = Rep.FULL_CPT) -> bool:
    """True when ``parents`` and all its supersets can go (penalty alone beats ``sub``)."""
    parents = make_parent_set(parents)
    if not set(sub.parents) < set(parents):
        raise ValueError(f"{sub.parents} is not a strict subset of {parents}")
    return sub.score - _penalty(Rep(rep), parents, N) + epsilon < -SCORE_SLACK


def noisyor_infeasible(cv) -> bool:
    return not is_feasible(cv)


def prune_noisyor_by_null(null_score: float, parents, N: int, epsilon: float) -> bool:
    return penalty_noisyor(parents, N) > null_score + epsilon + SCORE_SLACK


@dataclass
class NodeScores:
    child: int
    cpt: list
    nor: list
    scored: Counter = field(default_factory=Counter)  # per representation
    pruned: Counter = field(default_factory=Counter)  # per (representation, rule)
    candidates: int = 0


def enumerate_node_scores(
    dataset: Dataset,
    child: int,
    epsilon: float,
    cfg: FitConfig = FitConfig(),
    max_parents: Optional[int] = None,
    prune: bool = True,
    noisy_or: bool = True,
) -> NodeScores:
    """Score the parent-set lattice of ``child`` in cardinality order.

    Each representation keeps its own set of dead candidates (those cut with
    all supersets). For every live candidate the best score over its strict
    subsets is derived from its immediate subsets, so both the subset and the
    penalty rule see the minimum over everything already scored.
    ``prune=False`` scores every candidate (only infeasible noisy-ORs are
    skipped); ``noisy_or=False`` restricts scoring to full CPTs.
    """
    N = dataset.N
    others = [v for v in range(dataset.n) if v != child]
    limit = len(others) if max_parents is None else min(max_parents, len(others))
    out = NodeScores(child, [], [])
    cache = HotStartCache()

    # parents -> own score (inf when unscored) and best score over strict subsets
    own = {Rep.FULL_CPT: {}, Rep.NOISY_OR: {}}
    below = {Rep.FULL_CPT: {}, Rep.NOISY_OR: {}}
    dead = {Rep.FULL_CPT: set(), Rep.NOISY_OR: set()}
    null_score = math.inf

    def is_dead(rep, ps):
        if not dead[rep]:
            return False
        s = set(ps)
        return any(set(d) <= s for d in dead[rep])

    def best_below(rep, ps):
        best = math.inf
        for sub in combinations(ps, len(ps) - 1):
            best = min(best, own[rep].get(sub, math.inf), below[rep].get(sub, math.inf))
        return best

    for size in range(limit + 1):
        for ps in combinations(others, size):
            out.candidates += 1
            cv = None
            for rep in (Rep.FULL_CPT, Rep.NOISY_OR):
                if rep is Rep.NOISY_OR and not (ps and noisy_or):
                    continue
                if is_dead(rep, ps):
                    continue
                sub_best = best_below(rep, ps) if ps else math.inf
                below[rep][ps] = sub_best
                pen = _penalty(rep, ps, N)
                if prune and sub_best - pen + epsilon < -SCORE_SLACK:
                    dead[rep].add(ps)
                    out.pruned[(rep.value, PENALTY)] += 1
                    continue
                if prune and rep is Rep.NOISY_OR and prune_noisyor_by_null(null_score, ps, N, epsilon):
                    dead[rep].add(ps)
                    out.pruned[(rep.value, NULL)] += 1
                    continue
                if cv is None:
                    cv = counts(dataset, child, ps)
                if rep is Rep.NOISY_OR and noisyor_infeasible(cv):
                    out.pruned[(rep.value, INFEASIBLE)] += 1
                    continue
                if rep is Rep.FULL_CPT:
                    entry = bic_full(dataset, child, ps, cv=cv)
                    if not ps:
                        null_score = entry.score
                else:
                    entry = bic_noisyor(dataset, child, ps, cache, cfg, cv=cv)
                out.scored[rep.value] += 1
                own[rep][ps] = entry.score
                if prune and sub_best + epsilon <= entry.score - SCORE_SLACK:
                    out.pruned[(rep.value, SUBSET)] += 1
                    continue
                (out.cpt if rep is Rep.FULL_CPT else out.nor).append(entry)
    return out


def merge_tables(cpt_list, nor_list, epsilon: float, N: Optional[int] = None) -> list:
    """Union of both lists minus entries dominated by a strict subset in the other list.

    Applies the subset rule and (when ``N`` is given) the penalty rule across
    representations; comparisons within one list are left to enumeration.
    """
    lists = {Rep.FULL_CPT: list(cpt_list), Rep.NOISY_OR: list(nor_list)}
    kept = []
    for rep, mine in lists.items():
        theirs = lists[Rep.NOISY_OR if rep is Rep.FULL_CPT else Rep.FULL_CPT]
        for e in mine:
            s = set(e.parents)
            drop = False
            for o in theirs:
                if o.child != e.child:
                    raise ValueError("merging lists of different nodes")
                if not set(o.parents) < s:
                    continue
                if o.score + epsilon <= e.score - SCORE_SLACK:
                    drop = True
                    break
                if N is not None and o.score - _penalty(rep, e.parents, N) + epsilon < -SCORE_SLACK:
                    drop = True
                    break
            if not drop:
                kept.append(e)
    kept.sort(key=lambda e: (e.score, len(e.parents), e.parents, e.rep.value))
    return kept


@dataclass
class ScoringReport:
    table: ScoreTable
    nodes: list  # NodeScores per node
    merged_away: list  # per node, entries dropped by merge_tables

    def stats(self) -> dict:
        scored = Counter()
        pruned = Counter()
        candidates = 0
        for ns in self.nodes:
            scored.update(ns.scored)
            pruned.update({f"{rep}:{rule}": c for (rep, rule), c in ns.pruned.items()})
            candidates += ns.candidates
        retained = sum(len(e) for e in self.table.entries)
        return {
            "parent_set_candidates": candidates,
            "scored": dict(scored),
            "pruned": dict(sorted(pruned.items())),
            "merged_away": sum(self.merged_away),
            "retained": retained,
        }


def build_score_table(
    dataset: Dataset,
    epsilon: float,
    cfg: FitConfig = FitConfig(),
    max_parents: Optional[int] = None,
    threads: int = 1,
    prune: bool = True,
    noisy_or: bool = True,
) -> ScoringReport:
    """Score, prune and merge candidates for every node (nodes in parallel)."""

    def work(child):
        ns = enumerate_node_scores(dataset, child, epsilon, cfg, max_parents, prune, noisy_or)
        nor = ns.nor
        merged = merge_tables(ns.cpt, nor, epsilon, dataset.N) if prune else sorted(
            ns.cpt + nor, key=lambda e: (e.score, len(e.parents), e.parents, e.rep.value)
        )
        return ns, merged, len(ns.cpt) + len(nor) - len(merged)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(dataset.n)))
    else:
        results = [work(c) for c in range(dataset.n)]
    table = ScoreTable(dataset.names, tuple(tuple(r[1]) for r in results))
    return ScoringReport(table, [r[0] for r in results], [r[2] for r in results])
