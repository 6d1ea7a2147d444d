"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ProbabilityMatrix
from ..errors import DimensionMismatch, EmptyLabeledSet, ValidationError


@dataclass(frozen=True)
class LearnerConfig:
    epochs: int = 200
    learning_rate: float = 0.5
    l2: float = 1e-3
    max_halvings: int = 5

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValidationError("l2 must be non-negative")
        if self.max_halvings < 0:
            raise ValidationError("max_halvings must be non-negative")


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(W, bias, X, y, l2: float):
    """Mean cross-entropy plus ``0.5 * l2 * ||W||^2`` and its gradients.

    ``W`` is ``C x d``, ``bias`` length ``C``; returns ``(loss, dW, dbias)``.
    """
    W = np.asarray(W, dtype=float)
    bias = np.asarray(bias, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    logits = X @ W.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted - log_norm[:, None]
    loss = -log_p[np.arange(n), y].mean() + 0.5 * l2 * float(np.sum(W * W))
    G = np.exp(log_p)
    G[np.arange(n), y] -= 1.0
    G /= n
    return float(loss), G.T @ X + l2 * W, G.sum(axis=0)


@dataclass
class Learner:
    weights: np.ndarray
    bias: np.ndarray
    config: LearnerConfig
    loss_history: tuple = ()
    halvings: int = 0

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    def logits(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.shape[1]:
            raise DimensionMismatch(f"expected {self.weights.shape[1]} features, got {X.shape[1]}")
        return X @ self.weights.T + self.bias

    def predict_proba(self, X) -> ProbabilityMatrix:
        return ProbabilityMatrix(_softmax(self.logits(X)))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)

    def accuracy(self, X, y) -> float:
        return float(np.mean(self.predict(X) == np.asarray(y)))


def train_learner(X, y, n_classes: int, config: LearnerConfig | None = None) -> Learner:
    """Fit from zero initialisation for a fixed number of epochs.

    If the loss ever rises, training restarts with half the learning rate,
    at most ``config.max_halvings`` times. After the last allowed halving
    the run stops at the first rise and keeps the weights reached so far.
    Classes with no labeled samples keep a weight row; they simply never
    receive positive gradient.
    """
    config = config or LearnerConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyLabeledSet("cannot train on an empty labeled set")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch("one label per sample required")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValidationError(f"labels outside [0, {n_classes})")
    d = X.shape[1]
    lr = config.learning_rate
    for attempt in range(config.max_halvings + 1):
        W = np.zeros((n_classes, d))
        b = np.zeros(n_classes)
        loss, gW, gb = loss_and_grad(W, b, X, y, config.l2)
        history = [loss]
        rose = False
        for _ in range(config.epochs):
            W_new = W - lr * gW
            b_new = b - lr * gb
            new_loss, gW_new, gb_new = loss_and_grad(W_new, b_new, X, y, config.l2)
            if new_loss > loss:
                rose = True
                break
            W, b, loss, gW, gb = W_new, b_new, new_loss, gW_new, gb_new
            history.append(loss)
        if not rose or attempt == config.max_halvings:
            return Learner(W, b, config, tuple(history), attempt)
        lr *= 0.5
    raise AssertionError("unreachable")
