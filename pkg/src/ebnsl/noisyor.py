"""Noisy-OR CPDs: CPT expansion, likelihood fitting by gradient descent, BIC.

The fitted objective is the negative log-likelihood
``-sum_jk n_jk ln phi_jk(q)``, which differs from the conditional KL between
the empirical CPT and the noisy-OR CPT only by a constant and a 1/N factor.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .core import (
    Cpt,
    CountVector,
    Dataset,
    InfeasibleCandidate,
    LocalScore,
    NoisyOrParams,
    Rep,
    Representation,
    config_bits,
    make_parent_set,
)
from .data import counts

HOT_START_DEFAULT = 0.9


@dataclass(frozen=True)
class FitConfig:
    threshold: float = 1e-6
    max_iter: int = 500
    clamp: float = 1e-6
    initial_step: float = 1.0
    shrink: float = 0.5
    max_shrinks: int = 40

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if not 0 < self.clamp < 0.5:
            raise ValueError("clamp must lie in (0, 0.5)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if not self.initial_step > 0:
            raise ValueError("initial step must be positive")
        if self.max_shrinks < 1:
            raise ValueError("max_shrinks must be at least 1")


@dataclass(frozen=True)
class FitResult:
    params: NoisyOrParams
    objective: float
    iterations: int
    initial_objective: float


def _q(q) -> np.ndarray:
    return q.as_array() if isinstance(q, NoisyOrParams) else np.asarray(q, dtype=float)


def expand_cpt(q) -> Cpt:
    """Full CPT of a noisy-OR: P(child=0 | j) is the product of active parents' q."""
    q = _q(q)
    bits = config_bits(len(q))
    phi0 = np.exp(bits @ np.log(q)) if len(q) else np.ones(1)
    phi0[0] = 1.0
    return Cpt.from_array(np.column_stack([phi0, 1.0 - phi0]))


def is_feasible(cv: CountVector) -> bool:
    return cv.table[0, 1] == 0


def _check_feasible(cv: CountVector) -> None:
    if not is_feasible(cv):
        raise InfeasibleCandidate(
            f"{cv.table[0, 1]} record(s) have the child set to 1 while every candidate parent is 0"
        )


def _phi0(bits: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.exp(bits @ np.log(q))


def nor_objective(cv: CountVector, q) -> float:
    """Negative log-likelihood of the counts under the noisy-OR with parameters q."""
    _check_feasible(cv)
    q = _q(q)
    if len(q) != len(cv.parents):
        raise ValueError("parameter count does not match parent count")
    bits = config_bits(len(q))
    log_phi0 = bits @ np.log(q)
    n0 = cv.table[:, 0]
    n1 = cv.table[1:, 1]
    total = -float(n0 @ log_phi0)
    if n1.any():
        # log(1 - phi0) via expm1 stays accurate when phi0 is close to 1
        log_phi1 = np.log(-np.expm1(log_phi0[1:]))
        total -= float(n1 @ log_phi1)
    return total


def nor_gradient(cv: CountVector, q) -> np.ndarray:
    """Analytic gradient of :func:`nor_objective` with respect to q."""
    _check_feasible(cv)
    q = _q(q)
    bits = config_bits(len(q))
    phi0 = _phi0(bits, q)
    n0 = cv.table[:, 0].astype(float)
    n1 = cv.table[:, 1].astype(float)
    w = n0.copy()
    # j = 0 has no active parent so its row of ``bits`` is zero; skip it to avoid 0/0
    odds = phi0[1:] / -np.expm1(np.log(phi0[1:]))
    w[1:] -= n1[1:] * odds
    return -(bits.T @ w) / q


def geometric_line_search(
    q, grad, objective: Callable[[np.ndarray], float], cfg: FitConfig = FitConfig(), f0: Optional[float] = None
) -> float:
    """Backtracking search over the steps ``s0 * rho**m``, m < ``cfg.max_shrinks``.

    Starting from the largest step whose clamped update strictly lowers the
    objective, keeps shrinking while the next step is lower still, and returns
    the best step found. Returns 0.0 when no trial step improves on ``f0``.
    """
    q = _q(q)
    grad = np.asarray(grad, dtype=float)
    if f0 is None:
        f0 = objective(q)
    lo, hi = cfg.clamp, 1.0 - cfg.clamp
    step = cfg.initial_step
    best_step, best_f = 0.0, f0
    for _ in range(cfg.max_shrinks):
        f_trial = objective(np.clip(q - step * grad, lo, hi))
        if f_trial < best_f:
            best_step, best_f = step, f_trial
        elif best_step:
            # past the best point of the geometric grid
            break
        step *= cfg.shrink
    return best_step


def fit_noisyor(cv: CountVector, init, cfg: FitConfig = FitConfig()) -> FitResult:
    """Projected gradient descent on the noisy-OR likelihood.

    Stops after ``cfg.max_iter`` iterations, when the line search finds no
    improving step, when the gradient changes by less than the threshold
    (Euclidean norm), or when the objective improves by less than the
    threshold. Returns the lowest-objective iterate visited.
    """
    _check_feasible(cv)
    lo, hi = cfg.clamp, 1.0 - cfg.clamp
    q = np.clip(_q(init), lo, hi)
    if len(q) != len(cv.parents) or not len(q):
        raise ValueError("need one initial value per parent (at least one parent)")

    def f(x):
        return nor_objective(cv, x)

    fq = f(q)
    g = nor_gradient(cv, q)
    f_init = fq
    best_q, best_f = q, fq
    it = 0
    while it < cfg.max_iter:
        it += 1
        step = geometric_line_search(q, g, f, cfg, f0=fq)
        if step == 0.0:
            break
        q_new = np.clip(q - step * g, lo, hi)
        f_new = f(q_new)
        g_new = nor_gradient(cv, q_new)
        grad_change = float(np.linalg.norm(g_new - g))
        improvement = fq - f_new
        q, fq, g = q_new, f_new, g_new
        if fq < best_f:
            best_q, best_f = q, fq
        if grad_change < cfg.threshold or improvement < cfg.threshold:
            break
    return FitResult(NoisyOrParams(tuple(best_q)), best_f, it, f_init)


class HotStartCache:
    """Fitted noisy-OR parameters of already-scored candidates of one node."""

    def __init__(self):
        self._fits: dict = {}
        self._lock = threading.Lock()

    def put(self, parents, params: NoisyOrParams, objective: float) -> None:
        with self._lock:
            self._fits[make_parent_set(parents)] = (params, objective)

    def get(self, parents):
        with self._lock:
            return self._fits.get(make_parent_set(parents))

    def __contains__(self, parents) -> bool:
        return self.get(parents) is not None

    def __len__(self) -> int:
        return len(self._fits)


def hot_start(cache: Optional[HotStartCache], parents, default: float = HOT_START_DEFAULT) -> NoisyOrParams:
    """Initial q for ``parents`` from the best cached immediate subset."""
    parents = make_parent_set(parents)
    best = None
    if cache is not None and len(parents) > 1:
        for sub in combinations(parents, len(parents) - 1):
            hit = cache.get(sub)
            if hit is not None and (best is None or hit[1] < best[1][1]):
                best = (sub, hit)
    if best is None:
        return NoisyOrParams((default,) * len(parents))
    sub, (params, _) = best
    inherited = dict(zip(sub, params.q))
    return NoisyOrParams(tuple(inherited.get(p, default) for p in parents))


def penalty_noisyor(parents, N: int) -> float:
    if N < 1:
        raise ValueError("N must be at least 1")
    return len(parents) * math.log(N) / 2


def bic_noisyor(
    dataset: Dataset,
    child: int,
    parents,
    cache: Optional[HotStartCache] = None,
    cfg: FitConfig = FitConfig(),
    cv: CountVector = None,
) -> LocalScore:
    parents = make_parent_set(parents)
    if not parents:
        raise ValueError("noisy-OR needs at least one parent")
    if cv is None:
        cv = counts(dataset, child, parents)
    _check_feasible(cv)
    fit = fit_noisyor(cv, hot_start(cache, parents), cfg)
    if cache is not None:
        cache.put(parents, fit.params, fit.objective)
    score = fit.objective + penalty_noisyor(parents, dataset.N)
    return LocalScore(child, parents, Representation(Rep.NOISY_OR, fit.params), score)
