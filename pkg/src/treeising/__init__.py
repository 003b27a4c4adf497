"""Structure learning and exact inference for zero-field tree Ising models.

Chow-Liu and truncation learners sit on top of exact tree inference. The
package scores fitted models with small-set total variation losses and ships
brute-force and Monte-Carlo checkers for the underlying guarantees.
"""
from .estimation import ThresholdSpec, empirical_correlations, hoeffding_epsilon, strong_edge_threshold
from .evaluation import (
    LossReport,
    MarginalTable,
    conditional_prediction_error,
    exact_marginal,
    kl_to_projection,
    sstv2,
    sstv_k,
    symmetrized_kl,
)
from .harness import SweepConfig, SweepRow, gen_model, repro_chain, sweep
from .learners import LearnedModel, chow_liu, fit, project, truncation
from .model import (
    Forest,
    Tree,
    TreeIsingModel,
    chain_family,
    chain_model,
    correlation_matrix,
    hard_family,
    log_partition,
    pair_marginal,
    pairwise_correlation,
    random_tree_model,
    read_model,
    star_model,
    write_model,
)
from .sampling import SampleMatrix, SeedSpec, read_samples, sample, write_samples
from .verification import (
    EventReport,
    PathStatistics,
    TwoTreesWitness,
    check_events,
    enumerate_spanning_trees,
    product_concentration_check,
    two_trees_witness,
    zy_statistics,
)

__version__ = "0.1.0"

__all__ = [
    "ThresholdSpec",
    "empirical_correlations",
    "hoeffding_epsilon",
    "strong_edge_threshold",
    "LossReport",
    "MarginalTable",
    "conditional_prediction_error",
    "exact_marginal",
    "kl_to_projection",
    "sstv2",
    "sstv_k",
    "symmetrized_kl",
    "SweepConfig",
    "SweepRow",
    "gen_model",
    "repro_chain",
    "sweep",
    "LearnedModel",
    "chow_liu",
    "fit",
    "project",
    "truncation",
    "Forest",
    "Tree",
    "TreeIsingModel",
    "chain_family",
    "chain_model",
    "correlation_matrix",
    "hard_family",
    "log_partition",
    "pair_marginal",
    "pairwise_correlation",
    "random_tree_model",
    "read_model",
    "star_model",
    "write_model",
    "SampleMatrix",
    "SeedSpec",
    "read_samples",
    "sample",
    "write_samples",
    "EventReport",
    "PathStatistics",
    "TwoTreesWitness",
    "check_events",
    "enumerate_spanning_trees",
    "product_concentration_check",
    "two_trees_witness",
    "zy_statistics",
]
