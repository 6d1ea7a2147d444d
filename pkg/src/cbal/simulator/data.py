"""Synthetic long-tailed datasets and the initial labeled split."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import CycleState
from ..errors import DegenerateSpec, IndivisibleInit, ValidationError


@dataclass(frozen=True)
class DatasetSpec:
    """Gaussian-mixture dataset with a step long tail.

    Every class starts with ``samples_per_class`` training samples. A
    fraction ``init_fraction`` of each class is reserved (balanced) for the
    initial labeled pool; of the rest, the last
    ``round(n_classes * imbalanced_fraction)`` classes keep only
    ``round(samples_per_class * imbalance_factor)`` samples.
    """

    n_classes: int
    samples_per_class: int
    feature_dim: int
    class_separation: float = 3.0
    imbalance_factor: float = 1.0
    imbalanced_fraction: float = 0.5
    seed: int = 0
    test_per_class: int = 100
    init_fraction: float = 0.1

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValidationError("need at least 2 classes")
        if self.samples_per_class < 1:
            raise ValidationError("samples_per_class must be >= 1")
        if self.feature_dim < 1:
            raise ValidationError("feature_dim must be >= 1")
        if not (0 < self.imbalance_factor <= 1):
            raise ValidationError(f"imbalance_factor must be in (0, 1], got {self.imbalance_factor}")
        if not (0 <= self.imbalanced_fraction <= 1):
            raise ValidationError("imbalanced_fraction must be in [0, 1]")
        if not (0 <= self.init_fraction < 1):
            raise ValidationError("init_fraction must be in [0, 1)")
        if self.test_per_class < 1:
            raise ValidationError("test_per_class must be >= 1")

    @property
    def tail_classes(self) -> np.ndarray:
        k = _round_half_up(self.n_classes * self.imbalanced_fraction)
        return np.arange(self.n_classes - k, self.n_classes)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class Dataset:
    """Features and labels plus index splits.

    ``reserve_idx`` (a subset of ``train_idx``) is the balanced pool the
    initial labeled set is drawn from; it is empty for ingested data, in
    which case the whole training split is used.
    """

    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    n_classes: int
    reserve_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        for name in ("train_idx", "test_idx", "reserve_idx", "labels"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        feats = np.asarray(self.features, dtype=float)
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        if feats.shape[0] != self.labels.shape[0]:
            raise ValidationError("one label per feature row required")
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise ValidationError("train and test splits overlap")
        if not np.all(np.isin(self.reserve_idx, self.train_idx)):
            raise ValidationError("reserve must lie inside the training split")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValidationError("labels outside [0, n_classes)")

    @classmethod
    def from_arrays(cls, train_x, train_y, test_x, test_y, n_classes: int | None = None) -> "Dataset":
        train_x = np.asarray(train_x, dtype=float)
        test_x = np.asarray(test_x, dtype=float)
        train_y = np.asarray(train_y, dtype=np.int64)
        test_y = np.asarray(test_y, dtype=np.int64)
        if n_classes is None:
            n_classes = int(max(train_y.max(), test_y.max())) + 1
        n_tr = train_x.shape[0]
        return cls(
            features=np.vstack([train_x, test_x]),
            labels=np.concatenate([train_y, test_y]),
            train_idx=np.arange(n_tr),
            test_idx=np.arange(n_tr, n_tr + test_x.shape[0]),
            n_classes=n_classes,
        )

    def class_counts(self, idx) -> np.ndarray:
        return np.bincount(self.labels[np.asarray(idx, dtype=np.int64)], minlength=self.n_classes)


def _class_means(spec: DatasetSpec, rng) -> np.ndarray:
    C, d = spec.n_classes, spec.feature_dim
    if C <= d:
        # scaled simplex vertices: every pair of means is class_separation apart
        means = np.zeros((C, d))
        means[np.arange(C), np.arange(C)] = spec.class_separation / math.sqrt(2.0)
    else:
        dirs = rng.normal(size=(C, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        means = dirs * spec.class_separation / math.sqrt(2.0)
    return means


def make_longtail_dataset(spec: DatasetSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    means = _class_means(spec, rng)
    C, n_y, d = spec.n_classes, spec.samples_per_class, spec.feature_dim
    n_reserve = _round_half_up(n_y * spec.init_fraction)
    n_keep = _round_half_up(n_y * spec.imbalance_factor)
    tail = set(spec.tail_classes.tolist())
    if tail and n_keep == 0:
        raise DegenerateSpec(
            f"imbalance factor {spec.imbalance_factor} leaves 0 of {n_y} samples in tail classes"
        )

    feats, labels, is_train, is_reserve = [], [], [], []
    for y in range(C):
        X = means[y] + rng.normal(size=(n_y, d))
        perm = rng.permutation(n_y)
        reserve = perm[:n_reserve]
        rest = perm[n_reserve:]
        if y in tail:
            rest = np.sort(rng.permutation(rest)[: min(n_keep, rest.size)])
        kept = np.sort(np.concatenate([reserve, rest]))
        feats.append(X[kept])
        labels.append(np.full(kept.size, y))
        is_train.append(np.ones(kept.size, dtype=bool))
        is_reserve.append(np.isin(kept, reserve))
    for y in range(C):
        X = means[y] + rng.normal(size=(spec.test_per_class, d))
        feats.append(X)
        labels.append(np.full(spec.test_per_class, y))
        is_train.append(np.zeros(spec.test_per_class, dtype=bool))
        is_reserve.append(np.zeros(spec.test_per_class, dtype=bool))

    is_train = np.concatenate(is_train)
    return Dataset(
        features=np.vstack(feats),
        labels=np.concatenate(labels),
        train_idx=np.flatnonzero(is_train),
        test_idx=np.flatnonzero(~is_train),
        n_classes=C,
        reserve_idx=np.flatnonzero(np.concatenate(is_reserve)),
    )


def init_labeled_split(
    ds: Dataset,
    b0: int,
    seed: int,
    budget_per_cycle: int = 0,
    total_budget: int | None = None,
) -> CycleState:
    """Draw ``b0 / C`` labeled samples per class; everything else in train is unlabeled."""
    C = ds.n_classes
    if b0 < C or b0 % C:
        raise IndivisibleInit(f"initial size {b0} is not a positive multiple of {C} classes")
    per_class = b0 // C
    pool = ds.reserve_idx if ds.reserve_idx.size else ds.train_idx
    rng = np.random.default_rng([seed, 0x1417])
    chosen = []
    for y in range(C):
        cand = pool[ds.labels[pool] == y]
        if cand.size < per_class:
            raise ValidationError(f"class {y} has {cand.size} samples available for the initial set, need {per_class}")
        chosen.append(np.sort(rng.permutation(cand)[:per_class]))
    labeled = np.sort(np.concatenate(chosen))
    unlabeled = np.setdiff1d(ds.train_idx, labeled)
    return CycleState(
        labeled=labeled,
        unlabeled=unlabeled,
        class_counts=np.full(C, per_class),
        cycle=1,
        budget_per_cycle=budget_per_cycle,
        initial_size=b0,
        total_budget=b0 if total_budget is None else total_budget,
    )
