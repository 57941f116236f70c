"""Synthetic noisy-OR ground truths, forward sampling and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    Cpt,
    Dataset,
    InconsistentEvidence,
    LocalScore,
    Network,
    NoisyOrParams,
    Rep,
    Representation,
)
from .data import counts
from .inference import node_cpt, posterior
from .noisyor import FitConfig, expand_cpt, fit_noisyor, hot_start

Q_GRID = np.round(np.arange(1, 100) / 100, 2)
RELATIVE_FLOOR = 1e-3


@dataclass(frozen=True)
class GroundTruth:
    network: Network
    child: Optional[int] = None
    true_q: Optional[NoisyOrParams] = None


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def gen_single_noisyor(parent_count: int, seed) -> GroundTruth:
    """Star network: ``parent_count`` fair-coin roots feeding one noisy-OR child."""
    if parent_count < 1:
        raise ValueError("need at least one parent")
    rng = _rng(seed)
    q = NoisyOrParams(tuple(rng.choice(Q_GRID, size=parent_count)))
    names = tuple(f"X{i + 1}" for i in range(parent_count)) + ("Y",)
    prior = Representation(Rep.FULL_CPT, Cpt(((0.5, 0.5),)))
    nodes = [LocalScore(i, (), prior, 0.0) for i in range(parent_count)]
    child = parent_count
    nodes.append(LocalScore(child, tuple(range(parent_count)), Representation(Rep.NOISY_OR, q), 0.0))
    return GroundTruth(Network(names, tuple(nodes)), child, q)


def topological_order(network: Network) -> list:
    order, done = [], set()

    def visit(v):
        if v in done:
            return
        for p in network.parents_of(v):
            visit(p)
        done.add(v)
        order.append(v)

    for v in range(network.n):
        visit(v)
    return order


def forward_sample(model, N: int, seed) -> Dataset:
    """Ancestral sampling of ``N`` i.i.d. instances from a network or ground truth."""
    network = model.network if isinstance(model, GroundTruth) else model
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = _rng(seed)
    values = np.zeros((N, network.n), dtype=np.uint8)
    for v in topological_order(network):
        parents = network.parents_of(v)
        p1 = node_cpt(network, v).as_array()[:, 1]
        if parents:
            config = values[:, list(parents)].astype(np.int64) @ (1 << np.arange(len(parents)))
        else:
            config = np.zeros(N, dtype=np.int64)
        values[:, v] = rng.random(N) < p1[config]
    return Dataset(network.names, values)


def relative_param_error(q_hat, q_true) -> float:
    """Mean over parents of ``|q_hat - q_true| / q_true``."""
    q_hat = np.asarray(getattr(q_hat, "q", q_hat), dtype=float)
    q_true = np.asarray(getattr(q_true, "q", q_true), dtype=float)
    if q_hat.shape != q_true.shape:
        raise ValueError("parameter vectors differ in length")
    return float(np.mean(np.abs(q_hat - q_true) / q_true))


def conditional_kl(theta_true, phi_hat, config_weights=None) -> float:
    """Weighted KL between the rows of two CPTs (``inf`` when support is missed)."""
    t = theta_true.as_array() if isinstance(theta_true, Cpt) else np.asarray(theta_true, float)
    p = phi_hat.as_array() if isinstance(phi_hat, Cpt) else np.asarray(phi_hat, float)
    if t.shape != p.shape:
        raise ValueError("CPTs cover different configuration spaces")
    if config_weights is None:
        w = np.full(len(t), 1.0 / len(t))
    else:
        w = np.asarray(config_weights, dtype=float)
        if w.shape != (len(t),) or abs(w.sum() - 1.0) > 1e-9 or (w < 0).any():
            raise ValueError("configuration weights must be a distribution over rows")
    pos = t > 0
    if (pos & (p == 0)).any(axis=1)[w > 0].any():
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, t * np.log(np.where(pos, t, 1.0) / np.where(pos, p, 1.0)), 0.0)
    return float(w @ terms.sum(axis=1))


def recovery_trial(parent_count: int, N: int, seed, cfg: FitConfig = FitConfig()) -> dict:
    """Generate, sample, fit; compare fitted to true noisy-OR parameters."""
    ss = np.random.SeedSequence(seed)
    gen_seed, sample_seed = ss.spawn(2)
    gt = gen_single_noisyor(parent_count, gen_seed)
    data = forward_sample(gt, N, sample_seed)
    parents = gt.network.parents_of(gt.child)
    cv = counts(data, gt.child, parents)
    fit = fit_noisyor(cv, hot_start(None, parents), cfg)
    k = len(parents)
    kl = conditional_kl(expand_cpt(gt.true_q), expand_cpt(fit.params), np.full(1 << k, 0.5**k))
    return {
        "q_true": list(gt.true_q.q),
        "q_hat": [round(v, 12) for v in fit.params.q],
        "relative_error": relative_param_error(fit.params, gt.true_q),
        "conditional_kl": kl,
        "iterations": fit.iterations,
    }


def run_recovery(
    parent_sizes: Sequence[int], N: int, trials: int = 30, seed: int = 0, cfg: FitConfig = FitConfig()
) -> dict:
    """Parameter-recovery experiment; medians per parent-set size."""
    rows = []
    for size in parent_sizes:
        results = [recovery_trial(size, N, [seed, size, t], cfg) for t in range(trials)]
        rows.append(
            {
                "parent_size": size,
                "N": N,
                "trials": trials,
                "median_relative_error": float(np.median([r["relative_error"] for r in results])),
                "median_conditional_kl": float(np.median([r["conditional_kl"] for r in results])),
                "per_trial": results,
            }
        )
    return {"experiment": "noisy-or-recovery", "seed": seed, "rows": rows}


def _sample_evidence(truth: Network, nodes: Sequence[int], rng: np.random.Generator) -> dict:
    evidence: dict = {}
    for v in nodes:
        p1 = posterior(truth, evidence, v)[1]
        evidence[v] = int(rng.random() < p1)
    return evidence


def inference_error_eval(learned: Network, truth: Network, trials: int = 1000, seed: int = 0) -> dict:
    """Posterior disagreement between two networks over the same variables.

    Each trial picks ceil(10%) of the nodes as evidence, instantiates them one
    at a time from the truth's posterior given the evidence so far, and
    compares P(V=1 | evidence) for every other node. Relative error is
    ``|dp| / max(p_truth, 0.001)``. Evidence impossible under the learned
    network scores error 1 (absolute) for every node of the trial and is
    counted under ``inconsistent_trials``.
    """
    if learned.names != truth.names:
        raise ValueError("networks must share the same variables in the same order")
    n = truth.n
    n_evidence = math.ceil(0.1 * n)
    abs_err, rel_err = [], []
    inconsistent = 0
    for t in range(trials):
        rng = _rng([seed, t])
        nodes = [int(v) for v in rng.choice(n, size=n_evidence, replace=False)]
        evidence = _sample_evidence(truth, nodes, rng)
        flagged = False
        for v in range(n):
            if v in evidence:
                continue
            p_true = posterior(truth, evidence, v)[1]
            try:
                p_learned = posterior(learned, evidence, v)[1]
                d = abs(p_learned - p_true)
            except InconsistentEvidence:
                flagged = True
                d = 1.0
            abs_err.append(d)
            rel_err.append(d / max(p_true, RELATIVE_FLOOR))
        inconsistent += flagged
    return {
        "trials": trials,
        "evidence_nodes": n_evidence,
        "median_absolute_error": float(np.median(abs_err)) if abs_err else 0.0,
        "median_relative_error": float(np.median(rel_err)) if rel_err else 0.0,
        "mean_absolute_error": float(np.mean(abs_err)) if abs_err else 0.0,
        "max_absolute_error": float(np.max(abs_err)) if abs_err else 0.0,
        "inconsistent_trials": inconsistent,
    }
