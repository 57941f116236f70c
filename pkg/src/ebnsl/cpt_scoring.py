"""Maximum-likelihood full CPTs and their BIC local score."""

from __future__ import annotations

import math

import numpy as np

from .core import Cpt, CountVector, Dataset, LocalScore, Rep, Representation
from .data import counts


def mle_cpt(cv: CountVector) -> Cpt:
    """Row-normalised counts; unseen configurations get (0.5, 0.5)."""
    t = cv.table.astype(float)
    nj = t.sum(axis=1, keepdims=True)
    theta = np.where(nj > 0, t / np.where(nj > 0, nj, 1.0), 0.5)
    return Cpt.from_array(theta)


def log_likelihood(cv: CountVector, cpt: Cpt) -> float:
    """``sum n_jk ln theta_jk`` with 0 ln 0 = 0; ``-inf`` when data hits a zero cell."""
    t = cv.table
    theta = cpt.as_array()
    if theta.shape != t.shape:
        raise ValueError("CPT and counts disagree on the number of configurations")
    hit = t > 0
    if (theta[hit] == 0).any():
        return -math.inf
    return math.fsum((t[hit] * np.log(theta[hit])).tolist())


def penalty_full(parents, N: int) -> float:
    if N < 1:
        raise ValueError("N must be at least 1")
    return (1 << len(parents)) * math.log(N) / 2


def bic_full(dataset: Dataset, child: int, parents, cv: CountVector = None) -> LocalScore:
    if cv is None:
        cv = counts(dataset, child, parents)
    cpt = mle_cpt(cv)
    score = -log_likelihood(cv, cpt) + penalty_full(cv.parents, dataset.N)
    return LocalScore(child, cv.parents, Representation(Rep.FULL_CPT, cpt), score)
