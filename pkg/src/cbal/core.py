"""Shared domain types and validation.

All arrays held by these types are copied on construction and flagged
read-only, so instances can be passed between modules (and threads) freely.
Indices are 0-based everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidCycle,
    NegativeEntry,
    NonFinite,
    RowNotStochastic,
    ValidationError,
)

ROW_SUM_TOL = 1e-6
# rows already this close to 1 are left untouched, which keeps validation idempotent
_RENORM_EPS = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProbabilityMatrix:
    """N x C row-stochastic matrix of predicted class probabilities."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def c_classes(self) -> int:
        return self.values.shape[1]

    def soft_counts(self, selection: "SelectionVector") -> np.ndarray:
        """Expected per-class composition ``P^T z`` of a selection."""
        if selection.n != self.n:
            raise DimensionMismatch(f"selection over {selection.n} samples, P has {self.n} rows")
        return self.values[np.asarray(selection.indices, dtype=int)].sum(axis=0)


def validate_probability_matrix(values) -> ProbabilityMatrix:
    """Check that ``values`` is a valid probability matrix and wrap it.

    Rows whose sum deviates from 1 by at most ``ROW_SUM_TOL`` are renormalized;
    larger deviations raise :class:`RowNotStochastic`.
    """
    if isinstance(values, ProbabilityMatrix):
        return values
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(f"expected a non-empty N x C matrix, got shape {arr.shape}")
    if arr.shape[1] < 2:
        raise ValidationError(f"need at least 2 classes, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("probability matrix contains NaN or inf")
    if np.any(arr < 0):
        i, j = np.argwhere(arr < 0)[0]
        raise NegativeEntry(f"negative probability {arr[i, j]!r} at ({i}, {j})")
    sums = arr.sum(axis=1)
    dev = np.abs(sums - 1.0)
    bad = np.flatnonzero(dev > ROW_SUM_TOL)
    if bad.size:
        i = int(bad[0])
        raise RowNotStochastic(f"row {i} sums to {sums[i]!r}")
    fix = dev > _RENORM_EPS
    if np.any(fix):
        arr = arr.copy()
        arr[fix] /= sums[fix, None]
    return ProbabilityMatrix(arr)


@dataclass(frozen=True)
class SelectionVector:
    """Sorted, duplicate-free set of selected pool indices."""

    indices: tuple
    n: int

    def __post_init__(self):
        idx = sorted(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValidationError("duplicate indices in selection")
        if idx and (idx[0] < 0 or idx[-1] >= self.n):
            raise ValidationError(f"selection index out of range [0, {self.n})")
        object.__setattr__(self, "indices", tuple(idx))

    def __len__(self) -> int:
        return len(self.indices)

    def mask(self) -> np.ndarray:
        z = np.zeros(self.n, dtype=bool)
        z[list(self.indices)] = True
        return z

    @classmethod
    def from_mask(cls, z) -> "SelectionVector":
        z = np.asarray(z)
        return cls(tuple(np.flatnonzero(z > 0.5)), z.shape[0])


@dataclass(frozen=True)
class BalanceTarget:
    """Per-class counts still required to reach a uniform labeled set."""

    counts: np.ndarray

    def __post_init__(self):
        c = _frozen(self.counts)
        if c.ndim != 1:
            raise ValidationError("balance target must be a vector")
        if not np.all(np.isfinite(c)):
            raise NonFinite("balance target must be finite")
        if np.any(c < 0):
            raise NegativeEntry("balance target entries must be >= 0")
        object.__setattr__(self, "counts", c)

    @property
    def c_classes(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class UncertaintyVector:
    """Per-sample informativeness; higher means more valuable to query."""

    scores: np.ndarray

    def __post_init__(self):
        s = _frozen(self.scores)
        if s.ndim != 1:
            raise ValidationError("uncertainty scores must be a vector")
        if not np.all(np.isfinite(s)):
            raise NonFinite("uncertainty scores must be finite")
        object.__setattr__(self, "scores", s)

    def as_costs(self) -> np.ndarray:
        """Scores turned into a minimisation cost vector."""
        return -self.scores


@dataclass(frozen=True)
class DistanceMatrix:
    """N x L Euclidean distances from unlabeled to labeled embeddings."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2:
            raise ValidationError("distance matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise NonFinite("distances must be finite")
        if np.any(v < 0):
            raise NegativeEntry("distances must be non-negative")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class CycleState:
    """Labeled/unlabeled bookkeeping at a cycle boundary.

    ``labeled`` and ``unlabeled`` are sorted index arrays into the dataset and
    ``class_counts[i]`` is the number of labeled samples of class ``i``.
    ``cycle`` is the loop counter: 1 right after the initial split, then
    incremented by :meth:`advance` each time a batch is annotated, so
    ``cycle - 1`` batches have been added so far.
    """

    labeled: np.ndarray
    unlabeled: np.ndarray
    class_counts: np.ndarray
    cycle: int
    budget_per_cycle: int
    initial_size: int
    total_budget: int

    def __post_init__(self):
        object.__setattr__(self, "labeled", _frozen(np.sort(self.labeled), dtype=np.int64))
        object.__setattr__(self, "unlabeled", _frozen(np.sort(self.unlabeled), dtype=np.int64))
        object.__setattr__(self, "class_counts", _frozen(self.class_counts, dtype=np.int64))
        if self.cycle < 0:
            raise InvalidCycle(f"cycle must be >= 0, got {self.cycle}")
        if np.intersect1d(self.labeled, self.unlabeled).size:
            raise ValidationError("labeled and unlabeled sets overlap")
        if np.any(self.class_counts < 0):
            raise ValidationError("negative class count")
        if int(self.class_counts.sum()) != self.labeled.size:
            raise ValidationError(
                f"class counts sum to {int(self.class_counts.sum())}, "
                f"but {self.labeled.size} samples are labeled"
            )

    @property
    def c_classes(self) -> int:
        return self.class_counts.shape[0]

    @property
    def completed_cycles(self) -> int:
        return max(self.cycle - 1, 0)

    def check_schedule(self) -> None:
        """Raise unless ``|labeled| = b0 + (completed cycles) * b``."""
        expected = self.initial_size + self.completed_cycles * self.budget_per_cycle
        if self.labeled.size != expected:
            raise ValidationError(f"|labeled| = {self.labeled.size}, expected {expected}")

    def advance(self, selected, revealed_labels) -> "CycleState":
        """Move ``selected`` dataset indices into the labeled set.

        ``revealed_labels`` are the oracle's ground-truth labels for them;
        class counts are only ever updated from these.
        """
        selected = np.asarray(selected, dtype=np.int64)
        revealed_labels = np.asarray(revealed_labels, dtype=np.int64)
        if selected.shape != revealed_labels.shape:
            raise DimensionMismatch("one revealed label per selected sample required")
        if np.unique(selected).size != selected.size:
            raise ValidationError("duplicate samples in batch")
        if not np.all(np.isin(selected, self.unlabeled)):
            raise ValidationError("selected samples must come from the unlabeled pool")
        counts = self.class_counts + np.bincount(revealed_labels, minlength=self.c_classes)
        return CycleState(
            labeled=np.union1d(self.labeled, selected),
            unlabeled=np.setdiff1d(self.unlabeled, selected),
            class_counts=counts,
            cycle=self.cycle + 1,
            budget_per_cycle=self.budget_per_cycle,
            initial_size=self.initial_size,
            total_budget=self.total_budget,
        )
