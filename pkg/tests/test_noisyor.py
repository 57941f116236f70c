import math

import numpy as np
import pytest

from ebnsl.core import CountVector, Dataset, InfeasibleCandidate, NoisyOrParams, Rep
from ebnsl.cpt_scoring import bic_full
from ebnsl.data import counts
from ebnsl.noisyor import (
    FitConfig,
    HotStartCache,
    bic_noisyor,
    expand_cpt,
    fit_noisyor,
    geometric_line_search,
    hot_start,
    is_feasible,
    nor_gradient,
    nor_objective,
    penalty_noisyor,
)
from ebnsl.synth import forward_sample, gen_single_noisyor
from oracles import central_difference, random_feasible_counts

# single parent: n_00=5, n_01=0, n_10=3, n_11=7
SINGLE = CountVector(1, (0,), np.array([[5, 0], [3, 7]]))


def test_expand_cpt_two_parents():
    rows = expand_cpt(NoisyOrParams((0.3, 0.4))).as_array()
    # configuration index: bit 0 = first parent
    assert rows[0, 0] == 1.0
    assert rows[1, 0] == pytest.approx(0.3)
    assert rows[2, 0] == pytest.approx(0.4)
    assert rows[3, 0] == pytest.approx(0.12)
    assert np.allclose(rows.sum(axis=1), 1.0)


def test_expand_cpt_small_cases():
    assert expand_cpt(NoisyOrParams((0.5,))).rows == ((1.0, 0.0), (0.5, 0.5))
    assert expand_cpt(NoisyOrParams((0.9,) * 3)).as_array()[7, 0] == pytest.approx(0.729)


def test_expand_cpt_adding_a_cause_never_raises_p0():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(1, 6))
        p0 = expand_cpt(rng.uniform(0.01, 0.99, size=k)).as_array()[:, 0]
        for j in range(2**k):
            for bit in range(k):
                assert p0[j | 1 << bit] <= p0[j] + 1e-15


def test_objective_values():
    assert nor_objective(SINGLE, [0.2]) == pytest.approx(6.39032, abs=1e-5)
    only_absent = CountVector(1, (0,), np.array([[9, 0], [0, 0]]))
    assert nor_objective(only_absent, [0.37]) == 0.0


def test_objective_deterministic_structure():
    # n_j1 = 0 everywhere: objective = -sum_j n_j0 * sum_{l in T_j} ln q_l
    table = np.array([[4, 0], [2, 0], [3, 0], [5, 0]])
    q = [0.3, 0.6]
    expected = -(2 * math.log(0.3) + 3 * math.log(0.6) + 5 * (math.log(0.3) + math.log(0.6)))
    assert nor_objective(CountVector(2, (0, 1), table), q) == pytest.approx(expected)


def test_infeasible_counts_raise():
    bad = CountVector(1, (0,), np.array([[5, 1], [3, 7]]))
    with pytest.raises(InfeasibleCandidate):
        nor_objective(bad, [0.5])
    with pytest.raises(InfeasibleCandidate):
        nor_gradient(bad, [0.5])


def test_gradient_hand_values():
    assert nor_gradient(SINGLE, [0.2])[0] == pytest.approx(-6.25)
    assert nor_gradient(SINGLE, [0.3])[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("k", range(1, 7))
def test_gradient_matches_finite_differences(k):
    rng = np.random.default_rng(100 + k)
    for _ in range(20):
        cv = CountVector(k, tuple(range(k)), random_feasible_counts(rng, k))
        q = rng.uniform(0.05, 0.95, size=k)
        fd = central_difference(lambda x: nor_objective(cv, x), q)
        an = nor_gradient(cv, q)
        assert np.allclose(an, fd, rtol=1e-4, atol=1e-4 * np.abs(fd).max())


def test_line_search_quadratic_toy():
    cfg = FitConfig(initial_step=1.0, shrink=0.5)
    f = lambda x: float((x[0] - 0.5) ** 2)
    step = geometric_line_search([0.9], [0.8], f, cfg)
    # s=1 lands on 0.1 (no decrease), s=0.5 lands on the minimum
    assert step == 0.5
    assert f([0.9 - step * 0.8]) < f([0.9])


def test_line_search_zero_gradient():
    f = lambda x: float((x[0] - 0.5) ** 2)
    assert geometric_line_search([0.5], [0.0], f) == 0.0


def test_line_search_exhaustion_returns_zero():
    # every step along -grad raises the objective
    f = lambda x: float(-x[0])
    assert geometric_line_search([0.5], [1.0], f, FitConfig(max_shrinks=40)) == 0.0


def test_fit_single_parent_closed_form():
    fit = fit_noisyor(SINGLE, [0.9])
    assert fit.params.q[0] == pytest.approx(0.3, abs=1e-4)
    assert fit.objective <= fit.initial_objective


def test_fit_from_optimum_stays_put():
    fit = fit_noisyor(SINGLE, [0.3])
    assert fit.params.q[0] == pytest.approx(0.3, abs=1e-9)
    assert fit.objective <= nor_objective(SINGLE, [0.3])


def test_fit_mutually_exclusive_parents_separates():
    # no record has both parents on; each q is a per-parent frequency
    table = np.array([[40, 0], [12, 28], [30, 10], [0, 0]])
    fit = fit_noisyor(CountVector(2, (0, 1), table), [0.9, 0.9])
    assert fit.params.q[0] == pytest.approx(12 / 40, abs=1e-3)
    assert fit.params.q[1] == pytest.approx(30 / 40, abs=1e-3)


def test_fit_is_monotone_best():
    rng = np.random.default_rng(8)
    for _ in range(30):
        k = int(rng.integers(1, 6))
        cv = CountVector(k, tuple(range(k)), random_feasible_counts(rng, k))
        init = rng.uniform(0.05, 0.95, size=k)
        fit = fit_noisyor(cv, init)
        assert fit.objective <= nor_objective(cv, init)
        assert fit.objective == pytest.approx(nor_objective(cv, fit.params), rel=1e-12)


def test_single_parent_closed_form_random():
    rng = np.random.default_rng(21)
    for _ in range(50):
        n10, n11, n00 = (int(x) for x in rng.integers(0, 300, size=3))
        n10 += 1
        cv = CountVector(1, (0,), np.array([[n00, 0], [n10, n11]]))
        assert fit_noisyor(cv, [0.9]).params.q[0] == pytest.approx(n10 / (n10 + n11), abs=1e-4)


def test_hot_start_inherits_subset():
    cache = HotStartCache()
    cache.put((0,), NoisyOrParams((0.3,)), 10.0)
    assert hot_start(cache, (0, 1)).q == (0.3, 0.9)
    assert hot_start(HotStartCache(), (0, 1)).q == (0.9, 0.9)
    assert hot_start(None, (2,)).q == (0.9,)


def test_hot_start_prefers_lowest_objective_subset():
    cache = HotStartCache()
    cache.put((0, 1), NoisyOrParams((0.2, 0.3)), 50.0)
    cache.put((0, 2), NoisyOrParams((0.4, 0.5)), 40.0)
    cache.put((1, 2), NoisyOrParams((0.6, 0.7)), 45.0)
    assert hot_start(cache, (0, 1, 2)).q == (0.4, 0.9, 0.5)


def test_hot_starts_do_not_hurt():
    cfg = FitConfig()
    rng = np.random.default_rng(4)
    worse = checked = 0
    while checked < 30:
        k = int(rng.integers(2, 6))
        cv = CountVector(k, tuple(range(k)), random_feasible_counts(rng, k))
        sub = tuple(range(k - 1))
        sub_cv = CountVector(k, sub, _marginal(cv.table, k))
        if not is_feasible(sub_cv):
            continue
        checked += 1
        cache = HotStartCache()
        sub_fit = fit_noisyor(sub_cv, [0.9] * (k - 1), cfg)
        cache.put(sub, sub_fit.params, sub_fit.objective)
        hot = fit_noisyor(cv, hot_start(cache, tuple(range(k))), cfg)
        cold = fit_noisyor(cv, hot_start(None, tuple(range(k))), cfg)
        worse += hot.objective > cold.objective + cfg.threshold
    assert worse <= 3


def _marginal(table, k):
    # drop the last parent (highest bit) by summing its two halves
    half = 2 ** (k - 1)
    return table[:half] + table[half:]


@pytest.mark.parametrize("k, N, expected", [(3, 100, 6.90776), (1, 1000, 3.45388), (0, 50, 0.0)])
def test_penalty_noisyor(k, N, expected):
    assert penalty_noisyor(tuple(range(k)), N) == pytest.approx(expected, abs=1e-5)


def test_bic_noisyor_single_parent():
    rows = [[0, 0]] * 5 + [[1, 0]] * 3 + [[1, 1]] * 7
    d = Dataset(("A", "Y"), np.array(rows))
    cache = HotStartCache()
    s = bic_noisyor(d, 1, (0,), cache)
    # -(3 ln 0.3 + 7 ln 0.7) + ln(15)/2 = 6.108643 + 1.354025
    assert s.score == pytest.approx(7.462668, abs=1e-5)
    assert s.rep is Rep.NOISY_OR
    assert (0,) in cache
    again = bic_noisyor(d, 1, (0,), HotStartCache())
    assert again == s


def test_bic_noisyor_rejects_empty_and_infeasible():
    d = Dataset(("A", "Y"), np.array([[0, 1], [1, 1]]))
    with pytest.raises(ValueError):
        bic_noisyor(d, 1, ())
    with pytest.raises(InfeasibleCandidate):
        bic_noisyor(d, 1, (0,))


def test_noisyor_beats_full_cpt_on_noisyor_data():
    wins = 0
    for seed in range(30):
        gt = gen_single_noisyor(2, seed)
        d = forward_sample(gt, 1000, seed + 1000)
        cv = counts(d, 2, (0, 1))
        nor = bic_noisyor(d, 2, (0, 1), cv=cv)
        wins += nor.score < bic_full(d, 2, (0, 1), cv=cv).score
    assert wins >= 24


def test_fit_config_validation():
    with pytest.raises(ValueError):
        FitConfig(clamp=0.5)
    with pytest.raises(ValueError):
        FitConfig(shrink=1.0)
    with pytest.raises(ValueError):
        FitConfig(threshold=0)
