"""End-to-end runs: data -> pruned score tables -> credible networks -> evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import CredibleSet, Dataset, Network, Rep
from .noisyor import FitConfig
from .pruning import ScoringReport, build_score_table
from .search import DEFAULT_MAX_NETWORKS, enumerate_credible
from .synth import forward_sample, inference_error_eval


@dataclass
class LearnResult:
    scoring: ScoringReport
    credible: CredibleSet


def learn(
    dataset: Dataset,
    epsilon: float,
    cfg: FitConfig = FitConfig(),
    max_parents: Optional[int] = None,
    max_networks: Optional[int] = DEFAULT_MAX_NETWORKS,
    threads: int = 1,
    noisy_or: bool = True,
) -> LearnResult:
    scoring = build_score_table(dataset, epsilon, cfg, max_parents, threads, noisy_or=noisy_or)
    return LearnResult(scoring, enumerate_credible(scoring.table, epsilon, max_networks))


def noisy_or_share(credible: CredibleSet) -> dict:
    """Per variable, the fraction of credible networks giving it a noisy-OR."""
    if not credible.networks:
        return {}
    names = credible.networks[0].names
    total = len(credible.networks)
    return {
        names[v]: sum(net.nodes[v].rep is Rep.NOISY_OR for net in credible.networks) / total
        for v in range(len(names))
    }


def ground_truth_eval(
    truth: Network,
    N: int,
    seed: int,
    epsilon: float = math.log(20),
    trials: int = 100,
    cfg: FitConfig = FitConfig(),
    max_parents: Optional[int] = None,
    max_networks: Optional[int] = DEFAULT_MAX_NETWORKS,
) -> dict:
    """Sample from ``truth``, learn, and compare inference of the best and worst
    credible networks and of the best full-CPT-only network against ``truth``."""
    data = forward_sample(truth, N, [seed, 0])
    mixed = learn(data, epsilon, cfg, max_parents, max_networks)
    cpt_only = learn(data, 0.0, cfg, max_parents, 1, noisy_or=False)
    nets = mixed.credible.networks
    candidates = {
        "best": nets[0],
        "worst": nets[-1],
        "cpt": cpt_only.credible.networks[0],
    }
    report = {
        "N": N,
        "seed": seed,
        "epsilon": epsilon,
        "credible_networks": len(nets),
        "truncated": mixed.credible.truncated,
        "opt": mixed.credible.opt,
        "opt_cpt_only": cpt_only.credible.opt,
    }
    for label, net in candidates.items():
        report[label] = {
            "score": net.score,
            "noisy_or_nodes": sum(e.rep is Rep.NOISY_OR for e in net.nodes),
            **inference_error_eval(net, truth, trials, seed),
        }
    return report
