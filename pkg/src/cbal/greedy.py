"""Representativeness selection: k-center greedy and its class-balanced variant.

Both routines start from the distance matrix ``D`` (unlabeled x labeled) and
grow it as samples are picked: the picked sample's row leaves ``D`` and its
distances to every unlabeled sample join ``D`` as a new column. Only the
running row minimum is needed to drive the selection, so the columns are
appended lazily; :class:`GreedyDistances` can still materialise the current
matrix for inspection.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .core import BalanceTarget, DistanceMatrix, ProbabilityMatrix, SelectionVector
from .errors import DimensionMismatch, InfeasibleBudget


def pairwise_distances(unlabeled_feats, labeled_feats) -> DistanceMatrix:
    U = np.atleast_2d(np.asarray(unlabeled_feats, dtype=float))
    L = np.atleast_2d(np.asarray(labeled_feats, dtype=float))
    if U.shape[1] != L.shape[1]:
        raise DimensionMismatch(f"feature dims differ: {U.shape[1]} vs {L.shape[1]}")
    if L.shape[0] < 1:
        raise DimensionMismatch("need at least one labeled sample")
    return DistanceMatrix(cdist(U, L, metric="euclidean"))


class GreedyDistances:
    """Incrementally updated distance matrix for greedy selection.

    Parameters
    ----------
    dist : DistanceMatrix
        Initial N x L distances from unlabeled to labeled samples.
    features : array (N, d)
        Embeddings of the unlabeled samples, used to compute the column
        appended for every newly selected sample.
    """

    def __init__(self, dist: DistanceMatrix, features):
        self.base = dist.values
        self.features = np.asarray(features, dtype=float)
        N = self.base.shape[0]
        if self.features.shape[0] != N:
            raise DimensionMismatch(f"{self.features.shape[0]} feature rows for {N} distance rows")
        self.remaining = np.ones(N, dtype=bool)
        self.nearest = self.base.min(axis=1) if self.base.shape[1] else np.full(N, np.inf)
        self.columns: list[np.ndarray] = []

    def select(self, i: int) -> None:
        """Drop row ``i`` and append its distance column."""
        self.remaining[i] = False
        col = cdist(self.features, self.features[i : i + 1]).ravel()
        self.columns.append(col)
        np.minimum(self.nearest, col, out=self.nearest)

    def matrix(self) -> np.ndarray:
        """Current ``(N - picked) x (L + picked)`` distance matrix."""
        full = np.column_stack([self.base] + self.columns) if self.columns else self.base
        return full[self.remaining]


def _check(dist: DistanceMatrix, b: int, features):
    N = dist.shape[0]
    if b > N or b < 0:
        raise InfeasibleBudget(f"budget {b} not in [0, {N}]")
    if features is None:
        raise DimensionMismatch("unlabeled features are required to append distance columns")


def kcenter_greedy(dist: DistanceMatrix, b: int, features) -> SelectionVector:
    """Pick ``b`` samples, each time the one farthest from its nearest labeled sample."""
    _check(dist, b, features)
    state = GreedyDistances(dist, features)
    picked = []
    for _ in range(b):
        nearest = np.where(state.remaining, state.nearest, -np.inf)
        i = int(np.argmax(nearest))
        picked.append(i)
        state.select(i)
    return SelectionVector(tuple(picked), dist.shape[0])


def greedy_class_balanced(
    p: ProbabilityMatrix,
    dist: DistanceMatrix,
    target: BalanceTarget,
    lam: float,
    b: int,
    features,
    return_state: bool = False,
):
    """Greedy k-center selection with an l1 class-balance penalty.

    At each step every remaining candidate ``j`` costs
    ``-d_j + lam * || omega - P^T z - p_j ||_1`` where ``d_j`` is its distance
    to the nearest labeled (or already picked) sample and ``P^T z`` the soft
    class counts picked so far. The cheapest candidate is taken, lowest index
    on ties. With ``return_state=True`` the final :class:`GreedyDistances` is
    returned alongside the selection.
    """
    _check(dist, b, features)
    if p.n != dist.shape[0]:
        raise DimensionMismatch(f"P has {p.n} rows, D has {dist.shape[0]}")
    if target.c_classes != p.c_classes:
        raise DimensionMismatch(f"target has {target.c_classes} classes, P has {p.c_classes}")
    P = p.values
    state = GreedyDistances(dist, features)
    soft = np.zeros(p.c_classes)
    picked = []
    for _ in range(b):
        resid = target.counts - soft
        balance = np.abs(resid[None, :] - P).sum(axis=1)
        cost = -state.nearest + lam * balance
        cost = np.where(state.remaining, cost, np.inf)
        i = int(np.argmin(cost))
        picked.append(i)
        soft += P[i]
        state.select(i)
    sel = SelectionVector(tuple(picked), dist.shape[0])
    return (sel, state) if return_state else sel
