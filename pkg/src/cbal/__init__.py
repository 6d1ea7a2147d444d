"""Class-balanced batch active learning."""

from .balance import compute_omega, l1_balance_distance, l1_score, omega_from_counts, selection_histogram
from .core import (
    BalanceTarget,
    CycleState,
    DistanceMatrix,
    ProbabilityMatrix,
    SelectionVector,
    UncertaintyVector,
    validate_probability_matrix,
)
from .greedy import greedy_class_balanced, kcenter_greedy, pairwise_distances
from .scoring import bald_scores, batch_negative_entropy, entropy, pseudo_label_matrix
from .solvers import SelectorConfig, SolveResult, solve_cbal

__version__ = "0.1.0"

__all__ = [
    "BalanceTarget",
    "CycleState",
    "DistanceMatrix",
    "ProbabilityMatrix",
    "SelectionVector",
    "SelectorConfig",
    "SolveResult",
    "UncertaintyVector",
    "bald_scores",
    "batch_negative_entropy",
    "compute_omega",
    "entropy",
    "greedy_class_balanced",
    "kcenter_greedy",
    "l1_balance_distance",
    "l1_score",
    "omega_from_counts",
    "pairwise_distances",
    "pseudo_label_matrix",
    "selection_histogram",
    "solve_cbal",
    "validate_probability_matrix",
]
