"""Sparse categorical cross-entropy, its fused softmax gradient, the accuracy
metric, and the RMSProp update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, LabelError, ParameterError, ShapeError
from .layers import softmax

# Floor for log arguments; keeps saturated float32 softmax rows finite.
LOG_FLOOR = 1e-12

DEFAULT_ALPHA = 0.9
DEFAULT_LEARNING_RATE = 0.001
DEFAULT_EPSILON = 1e-8


@dataclass
class LossValue:
    """Mean batch loss plus the number of correctly classified rows."""

    loss: float
    correct_count: int


def _check_labels(labels, classes):
    y = np.asarray(labels)
    if y.ndim != 1:
        raise LabelError("labels must be a flat integer list")
    if y.size and (y.min() < 0 or y.max() >= classes):
        raise LabelError(f"labels must lie in [0, {classes}), got range "
                         f"[{y.min()}, {y.max()}]")
    return y.astype(np.int64)


def scce_loss(probabilities: np.ndarray, labels) -> LossValue:
    """Sparse categorical cross-entropy over a (batch, classes) probability
    matrix with integer labels.

    loss = -(1/batch) * sum_i log p[i, label_i]. Each row must already be
    normalized (sum 1 within 1e-6).
    """
    p = np.asarray(probabilities)
    if p.ndim != 2:
        raise ShapeError(f"probabilities must be (batch, classes), got shape {p.shape}")
    n, classes = p.shape
    y = _check_labels(labels, classes)
    if y.shape[0] != n:
        raise ShapeError(f"{n} rows but {y.shape[0]} labels")
    row_sums = p.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        worst = int(np.argmax(np.abs(row_sums - 1.0)))
        raise ContractError(f"probability row {worst} sums to {row_sums[worst]}, not 1")
    picked = np.maximum(p[np.arange(n), y], LOG_FLOOR)
    loss = float(-np.mean(np.log(picked)))
    correct = int(np.sum(p.argmax(axis=1) == y))
    return LossValue(loss=loss, correct_count=correct)


def softmax_scce_grad(logits: np.ndarray, labels) -> np.ndarray:
    """Gradient of mean scce (softmax(logits), labels) w.r.t. the logits:
    (softmax(z) - onehot(label)) / batch."""
    z = np.asarray(logits)
    if z.ndim != 2:
        raise ShapeError(f"logits must be (batch, classes), got shape {z.shape}")
    n, classes = z.shape
    y = _check_labels(labels, classes)
    if y.shape[0] != n:
        raise ShapeError(f"{n} rows but {y.shape[0]} labels")
    grad = softmax(z)
    grad[np.arange(n), y] -= 1.0
    grad /= n
    return grad


def accuracy(probabilities: np.ndarray, labels) -> float:
    """Fraction of rows whose argmax equals the label."""
    p = np.asarray(probabilities)
    if p.ndim != 2 or p.shape[0] == 0:
        raise ParameterError("accuracy needs a nonempty (batch, classes) matrix")
    y = _check_labels(labels, p.shape[1])
    if y.shape[0] != p.shape[0]:
        raise ShapeError(f"{p.shape[0]} rows but {y.shape[0]} labels")
    return float(np.mean(p.argmax(axis=1) == y))


@dataclass
class RMSPropState:
    """Squared-gradient running average for one parameter tensor, plus the
    shared hyperparameters.

    v <- alpha*v + (1-alpha)*g^2 keeps v elementwise nonnegative; larger
    alpha weights past gradients more heavily.
    """

    acc: np.ndarray
    alpha: float = DEFAULT_ALPHA
    learning_rate: float = DEFAULT_LEARNING_RATE
    epsilon: float = DEFAULT_EPSILON

    @classmethod
    def for_param(cls, param: np.ndarray, alpha=DEFAULT_ALPHA,
                  learning_rate=DEFAULT_LEARNING_RATE, epsilon=DEFAULT_EPSILON):
        if not 0.0 <= alpha < 1.0:
            raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
        if learning_rate <= 0:
            raise ParameterError(f"learning rate must be positive, got {learning_rate}")
        if epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {epsilon}")
        return cls(acc=np.zeros_like(param), alpha=alpha,
                   learning_rate=learning_rate, epsilon=epsilon)


def rmsprop_step(params: np.ndarray, grads: np.ndarray, state: RMSPropState) -> None:
    """One in-place RMSProp update:

    v <- alpha*v + (1-alpha)*g^2
    w <- w - learning_rate * g / (sqrt(v) + epsilon)
    """
    if params.shape != grads.shape or params.shape != state.acc.shape:
        raise ShapeError(f"param/grad/accumulator shapes differ: "
                         f"{params.shape}, {grads.shape}, {state.acc.shape}")
    v = state.acc
    v *= state.alpha
    v += (1.0 - state.alpha) * grads * grads
    params -= state.learning_rate * grads / (np.sqrt(v) + state.epsilon)


class RMSProp:
    """RMSProp over a list of parameter tensors, updated in place."""

    def __init__(self, params: list[np.ndarray], learning_rate=DEFAULT_LEARNING_RATE,
                 alpha=DEFAULT_ALPHA, epsilon=DEFAULT_EPSILON):
        self.params = params
        self.states = [RMSPropState.for_param(p, alpha=alpha, learning_rate=learning_rate,
                                              epsilon=epsilon) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ShapeError(f"expected {len(self.params)} gradient tensors, got {len(grads)}")
        for p, g, s in zip(self.params, grads, self.states):
            rmsprop_step(p, g, s)
