"""Trade-off analysis over the balance weight lambda."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..balance import compute_omega, l1_score, selection_histogram
from ..errors import NoPlateau, ValidationError
from ..scoring import batch_negative_entropy
from ..solvers import SelectorConfig, solve_cbal
from .data import Dataset
from .loop import LoopConfig, initial_model


@dataclass(frozen=True)
class SweepRow:
    lambda_: float
    entropy_loss: float
    l1_loss: float
    l1_score: float
    proof: str


def lambda_sweep(ds: Dataset, lambdas, cfg: LoopConfig, solver: str = "branch_and_bound") -> list[SweepRow]:
    """Solve the first-cycle entropy selection once per lambda.

    Uses only the model trained on the initial labeled set. ``entropy_loss``
    is the negative-entropy term of the objective and ``l1_loss`` the
    unweighted balance term; ``l1_score`` is measured on the selection's
    true labels.
    """
    lambdas = [float(v) for v in lambdas]
    if not lambdas:
        raise ValidationError("lambda grid is empty")
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ValidationError("lambda grid must be sorted ascending")
    X, state, learner = initial_model(ds, cfg)
    P = learner.predict_proba(X[state.unlabeled])
    costs = batch_negative_entropy(P)
    target = compute_omega(state)
    rows = []
    for lam in lambdas:
        sel_cfg = SelectorConfig(
            lambda_=lam,
            budget=cfg.budget_per_cycle,
            solver=solver,
            time_limit=cfg.time_limit,
            gap_tolerance=cfg.gap_tolerance,
        )
        res = solve_cbal(costs, P, target, sel_cfg)
        chosen = state.unlabeled[np.array(res.selection.indices)]
        hist = selection_histogram(ds.labels[chosen], ds.n_classes)
        rows.append(SweepRow(lam, res.linear_term, res.balance_term, l1_score(hist, cfg.budget_per_cycle), res.proof))
    return rows


def select_lambda(table, plateau_tol: float = 0.02) -> float:
    """Smallest lambda from which every later l1 loss stays near the final one.

    "Near" means within ``plateau_tol`` relative to the final value. Raises
    :class:`NoPlateau` when only the last grid point qualifies.
    """
    if not table:
        raise ValidationError("empty sweep table")
    lams = np.array([r.lambda_ for r in table], dtype=float)
    loss = np.array([r.l1_loss for r in table], dtype=float)
    if np.any(np.diff(lams) < 0):
        raise ValidationError("sweep table must be sorted by lambda")
    final = loss[-1]
    close = np.abs(loss - final) <= plateau_tol * abs(final) + 1e-12
    # positions i such that every j >= i is close
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(close)))
    first = int(np.argmax(suffix_ok))
    if len(table) > 1 and first == len(table) - 1:
        raise NoPlateau("l1 loss is still falling at the end of the lambda grid")
    return float(lams[first])

