"""The batch active learning loop.

Each cycle trains a fresh learner on the labeled set, scores the unlabeled
pool, selects ``b`` samples with the chosen acquisition method, reveals their
true labels and records metrics. Class-balanced (``*_cb``) methods add the l1
balance penalty towards the current target; the plain variants are the same
selectors at ``lambda = 0``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..balance import compute_omega, l1_score, selection_histogram
from ..core import CycleState
from ..errors import BudgetExceedsPool, ConfigInvalid
from ..greedy import greedy_class_balanced, kcenter_greedy, pairwise_distances
from ..scoring import bald_scores, batch_negative_entropy, pseudo_label_matrix
from ..solvers import SOLVERS, SelectorConfig, bottom_b, solve_cbal
from .data import Dataset, init_labeled_split
from .learner import Learner, LearnerConfig, train_learner

METHODS = (
    "random",
    "entropy",
    "entropy_cb",
    "entropy_l1_pseudo",
    "kcenter",
    "kcenter_cb",
    "uncertainty_vec",
    "uncertainty_vec_cb",
    "bald",
    "bald_cb",
)

# independent random streams per cycle
_STREAM_RANDOM = 0
_STREAM_BOOTSTRAP = 1


@dataclass(frozen=True)
class LoopConfig:
    initial_size: int
    budget_per_cycle: int
    total_budget: int
    lambda_: float = 1.0
    solver: str = "local_search"
    time_limit: float | None = None
    gap_tolerance: float | None = None
    bald_samples: int = 10
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.learner, dict):
            object.__setattr__(self, "learner", LearnerConfig(**self.learner))
        if self.initial_size < 1 or self.budget_per_cycle < 1:
            raise ConfigInvalid("initial_size and budget_per_cycle must be >= 1")
        if self.total_budget < self.initial_size:
            raise ConfigInvalid("total_budget must be >= initial_size")
        if (self.total_budget - self.initial_size) % self.budget_per_cycle:
            raise ConfigInvalid(
                f"total_budget - initial_size = {self.total_budget - self.initial_size} "
                f"is not a multiple of budget_per_cycle = {self.budget_per_cycle}"
            )
        if not self.lambda_ >= 0:
            raise ConfigInvalid(f"lambda must be >= 0, got {self.lambda_}")
        if self.solver not in SOLVERS:
            raise ConfigInvalid(f"unknown solver {self.solver!r}")
        if self.bald_samples < 2:
            raise ConfigInvalid("bald_samples must be >= 2")

    @property
    def n_cycles(self) -> int:
        return (self.total_budget - self.initial_size) // self.budget_per_cycle

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    labeled_size: int
    test_accuracy: float
    l1_score: float
    solver_time: float
    histogram: tuple
    class_counts: tuple
    proof: str


@dataclass
class ExperimentRecord:
    method: str
    seed: int
    config: dict
    initial_accuracy: float
    n_classes: int
    cycles: list = field(default_factory=list)

    @property
    def l1_scores(self) -> np.ndarray:
        return np.array([c.l1_score for c in self.cycles])

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([c.test_accuracy for c in self.cycles])


def standardize(ds: Dataset) -> np.ndarray:
    """Features scaled by the training split's mean and standard deviation."""
    X = ds.features
    train = X[ds.train_idx]
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd


def _fit(X, labels, idx, n_classes, cfg: LoopConfig) -> Learner:
    return train_learner(X[idx], labels[idx], n_classes, cfg.learner)


def _discriminator_scores(X, state: CycleState, cfg: LoopConfig) -> np.ndarray:
    """Probability that each unlabeled sample belongs to the unlabeled pool.

    A binary logistic model tells the labeled set (class 0) from the pool
    (class 1); samples it confidently places in the pool are the ones least
    like anything already labeled.
    """
    idx = np.concatenate([state.labeled, state.unlabeled])
    y = np.concatenate([np.zeros(state.labeled.size, dtype=np.int64), np.ones(state.unlabeled.size, dtype=np.int64)])
    disc = train_learner(X[idx], y, 2, cfg.learner)
    return disc.predict_proba(X[state.unlabeled]).values[:, 1]


def _bootstrap_predictions(X, labels, state: CycleState, n_classes, cfg: LoopConfig, rng):
    mats = []
    L = state.labeled
    for _ in range(cfg.bald_samples):
        boot = L[rng.integers(0, L.size, size=L.size)]
        mats.append(_fit(X, labels, boot, n_classes, cfg).predict_proba(X[state.unlabeled]))
    return mats


def _select(method, X, labels, state, learner, n_classes, cfg: LoopConfig, cycle):
    """Return ``(positions into state.unlabeled, proof)``."""
    b = cfg.budget_per_cycle
    U = state.unlabeled
    lam = cfg.lambda_ if method.endswith("_cb") or method == "entropy_l1_pseudo" else 0.0
    sel_cfg = SelectorConfig(
        lambda_=lam,
        budget=b,
        solver=cfg.solver,
        time_limit=cfg.time_limit,
        gap_tolerance=cfg.gap_tolerance,
    )

    if method == "random":
        rng = np.random.default_rng((cfg.seed, cycle, _STREAM_RANDOM))
        return np.sort(rng.choice(U.size, size=b, replace=False)), "n/a"

    P = learner.predict_proba(X[U])
    target = compute_omega(state)

    if method in ("kcenter", "kcenter_cb"):
        dist = pairwise_distances(X[U], X[state.labeled])
        if method == "kcenter":
            sel = kcenter_greedy(dist, b, X[U])
        else:
            sel = greedy_class_balanced(P, dist, target, lam, b, X[U])
        return np.array(sel.indices), "heuristic"

    if method in ("entropy", "entropy_cb", "entropy_l1_pseudo"):
        costs = batch_negative_entropy(P)
    elif method.startswith("uncertainty_vec"):
        costs = -_discriminator_scores(X, state, cfg)
    else:
        rng = np.random.default_rng((cfg.seed, cycle, _STREAM_BOOTSTRAP))
        costs = bald_scores(_bootstrap_predictions(X, labels, state, n_classes, cfg, rng)).as_costs()

    if lam == 0.0:
        return bottom_b(costs, b), "optimal"
    balance_p = pseudo_label_matrix(P) if method == "entropy_l1_pseudo" else P
    res = solve_cbal(costs, balance_p, target, sel_cfg)
    return np.array(res.selection.indices), res.proof


def run_al_loop(ds: Dataset, method: str, cfg: LoopConfig) -> ExperimentRecord:
    if method not in METHODS:
        raise ConfigInvalid(f"unknown method {method!r}; choose from {METHODS}")
    if cfg.total_budget > ds.train_idx.size:
        raise BudgetExceedsPool(f"total budget {cfg.total_budget} exceeds the {ds.train_idx.size}-sample pool")
    C = ds.n_classes
    X = standardize(ds)
    labels = ds.labels
    test = ds.test_idx
    state = init_labeled_split(ds, cfg.initial_size, cfg.seed, cfg.budget_per_cycle, cfg.total_budget)
    state.check_schedule()
    learner = _fit(X, labels, state.labeled, C, cfg)
    record = ExperimentRecord(
        method=method,
        seed=cfg.seed,
        config=cfg.to_dict(),
        initial_accuracy=learner.accuracy(X[test], labels[test]),
        n_classes=C,
    )
    for _ in range(cfg.n_cycles):
        cycle = state.cycle
        t0 = time.perf_counter()
        pos, proof = _select(method, X, labels, state, learner, C, cfg, cycle)
        elapsed = time.perf_counter() - t0
        chosen = state.unlabeled[pos]
        revealed = labels[chosen]
        state = state.advance(chosen, revealed)
        state.check_schedule()
        if state.labeled.size + state.unlabeled.size != ds.train_idx.size:
            raise AssertionError("pool conservation violated")
        hist = selection_histogram(revealed, C)
        learner = _fit(X, labels, state.labeled, C, cfg)
        record.cycles.append(
            CycleRecord(
                cycle=cycle,
                labeled_size=int(state.labeled.size),
                test_accuracy=learner.accuracy(X[test], labels[test]),
                l1_score=l1_score(hist, cfg.budget_per_cycle),
                solver_time=elapsed,
                histogram=tuple(int(h) for h in hist),
                class_counts=tuple(int(n) for n in state.class_counts),
                proof=proof,
            )
        )
    return record


def initial_model(ds: Dataset, cfg: LoopConfig):
    """Standardized features, initial cycle state and the learner trained on it."""
    X = standardize(ds)
    state = init_labeled_split(ds, cfg.initial_size, cfg.seed, cfg.budget_per_cycle, cfg.total_budget)
    return X, state, _fit(X, ds.labels, state.labeled, ds.n_classes, cfg)

