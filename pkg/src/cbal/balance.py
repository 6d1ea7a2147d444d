"""Class-balance target, l1 deviation and the normalized L1 score."""

from __future__ import annotations

import numpy as np

from .core import BalanceTarget, CycleState, ProbabilityMatrix, SelectionVector
from .errors import BudgetMismatch, DimensionMismatch, InvalidCycle, ValidationError


def omega_from_counts(class_counts, cycle: int, budget_per_cycle: int, initial_size: int) -> BalanceTarget:
    """Samples still needed per class so that the labeled set is uniform after ``cycle``.

    ``omega_i = max((cycle * b + b0) / C - n_i, 0)``. Kept as reals; the
    clamp at zero is the only correction applied to over-represented classes.
    """
    if cycle < 1:
        raise InvalidCycle(f"cycle must be >= 1, got {cycle}")
    n = np.asarray(class_counts, dtype=float)
    per_class = (cycle * budget_per_cycle + initial_size) / n.shape[0]
    return BalanceTarget(np.maximum(per_class - n, 0.0))


def compute_omega(state: CycleState) -> BalanceTarget:
    return omega_from_counts(state.class_counts, state.cycle, state.budget_per_cycle, state.initial_size)


def l1_balance_distance(target: BalanceTarget, p: ProbabilityMatrix, z: SelectionVector) -> float:
    """``|| omega - P^T z ||_1`` for a concrete selection."""
    if target.c_classes != p.c_classes:
        raise DimensionMismatch(f"target has {target.c_classes} classes, P has {p.c_classes}")
    if z.n != p.n:
        raise DimensionMismatch(f"selection over {z.n} samples, P has {p.n} rows")
    return float(np.abs(target.counts - p.soft_counts(z)).sum())


def l1_score(counts, b: int) -> float:
    """Normalized distance of a selection histogram from uniform.

    0 means perfectly balanced, 1 means the whole budget went to one class.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or counts.shape[0] < 2:
        raise ValidationError("need a histogram over at least 2 classes")
    if b < 1:
        raise BudgetMismatch(f"budget must be >= 1, got {b}")
    if not np.isclose(counts.sum(), b, rtol=0, atol=1e-9):
        raise BudgetMismatch(f"histogram sums to {counts.sum()}, budget is {b}")
    C = counts.shape[0]
    dist = np.abs(counts - b / C).sum()
    return float(dist / (2.0 * b * (C - 1) / C))


def selection_histogram(labels, n_classes: int) -> np.ndarray:
    return np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)
