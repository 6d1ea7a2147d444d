"""Informativeness scores: entropy, BALD mutual information, pseudo labels.

Natural logarithms throughout, so the entropy of a uniform C-class
distribution is ``ln C``.
"""

from __future__ import annotations

import numpy as np

from .core import ROW_SUM_TOL, ProbabilityMatrix, UncertaintyVector, validate_probability_matrix
from .errors import InvalidDistribution, ShapeMismatch, TooFewSamples


def _plogp(p: np.ndarray) -> np.ndarray:
    # 0 * log 0 := 0
    out = np.zeros_like(p, dtype=float)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def entropy(p_row) -> float:
    p = np.asarray(p_row, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidDistribution("expected a non-empty probability vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise InvalidDistribution(f"not a probability vector: {p!r}")
    return float(-_plogp(p).sum())


def batch_negative_entropy(p: ProbabilityMatrix) -> np.ndarray:
    """Per-sample ``sum_i p_ji ln p_ji``, the linear coefficients of the entropy objective."""
    return _plogp(p.values).sum(axis=1)


def _row_entropies(values: np.ndarray) -> np.ndarray:
    return -_plogp(values).sum(axis=-1)


def bald_scores(stochastic_p) -> UncertaintyVector:
    """Mutual information between predictions and model parameters.

    ``stochastic_p`` is a sequence of T >= 2 prediction matrices of equal shape
    (one per stochastic forward pass or ensemble member). The score of sample
    j is the entropy of the mean prediction minus the mean of the entropies.
    """
    mats = [validate_probability_matrix(m).values for m in stochastic_p]
    if len(mats) < 2:
        raise TooFewSamples(f"need at least 2 stochastic predictions, got {len(mats)}")
    shape = mats[0].shape
    for t, m in enumerate(mats):
        if m.shape != shape:
            raise ShapeMismatch(f"prediction {t} has shape {m.shape}, expected {shape}")
    stack = np.stack(mats)
    mi = _row_entropies(stack.mean(axis=0)) - _row_entropies(stack).mean(axis=0)
    # Jensen guarantees mi >= 0; only float noise can push it below
    mi = np.where(mi < 0, 0.0, mi)
    return UncertaintyVector(mi)


def pseudo_label_matrix(p: ProbabilityMatrix) -> ProbabilityMatrix:
    """One-hot rows at the argmax class (ties go to the lowest class index)."""
    hard = np.zeros_like(p.values)
    hard[np.arange(p.n), np.argmax(p.values, axis=1)] = 1.0
    return ProbabilityMatrix(hard)
