"""Exact Bayesian-network structure learning with full-CPT and noisy-OR local structure."""

from .core import (
    CapacityError,
    Cpt,
    CountVector,
    CredibleSet,
    Dataset,
    InconsistentEvidence,
    InfeasibleCandidate,
    LocalScore,
    Network,
    NoisyOrParams,
    ParseError,
    Rep,
    Representation,
    ScoreTable,
    canonicalize,
    epsilon_from_bayes_factor,
    is_acyclic,
)
from .cpt_scoring import bic_full, log_likelihood, mle_cpt, penalty_full
from .data import counts, load_csv
from .noisyor import (
    FitConfig,
    HotStartCache,
    bic_noisyor,
    expand_cpt,
    fit_noisyor,
    geometric_line_search,
    hot_start,
    nor_gradient,
    nor_objective,
    penalty_noisyor,
)
from .pipeline import learn
from .pruning import build_score_table, enumerate_node_scores, merge_tables
from .search import enumerate_credible, optimal_score

__version__ = "0.1.0"
