"""Test-set balancing weights and weighted bias metrics.

Computes per-example weights that equalize the weighted mass of confounding
property sets across the two compared groups of a bias-measuring dataset while
provably minimizing the worst-case distortion of any model's accuracy, then
evaluates models with plain and weighted bias ratios, reference baselines,
and a paired randomization significance test.
"""

from .balancer import (
    BalancerConfig,
    EquivalenceClass,
    WeightAssignment,
    collapse_classes,
    compute_weights,
    trim,
)
from .data import (
    Dataset,
    Example,
    Group,
    PredictionSet,
    PropertySet,
    candidate_rank,
    dataset_stats,
    derive_property_sets,
    parse_gap_tsv,
    parse_name_annotations,
    parse_predictions,
)
from .metrics import BiasReport, accuracy, bias_ratio, correct_set, f1_score, weighted_accuracy
from .simplex import Solution, SolverConfig, Status, solve

__version__ = "0.1.0"

__all__ = [
    "BalancerConfig",
    "BiasReport",
    "Dataset",
    "EquivalenceClass",
    "Example",
    "Group",
    "PredictionSet",
    "PropertySet",
    "Solution",
    "SolverConfig",
    "Status",
    "WeightAssignment",
    "accuracy",
    "bias_ratio",
    "candidate_rank",
    "collapse_classes",
    "compute_weights",
    "correct_set",
    "dataset_stats",
    "derive_property_sets",
    "f1_score",
    "parse_gap_tsv",
    "parse_name_annotations",
    "parse_predictions",
    "solve",
    "trim",
    "weighted_accuracy",
]
