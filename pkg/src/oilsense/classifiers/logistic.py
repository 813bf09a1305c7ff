"""Multinomial (softmax) logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from ..errors import DivergenceError, DomainError
from .base import TrainedModel, check_training_data


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(weights, bias, x, onehot, l2_penalty):
    """Mean cross-entropy + (l2/2)*||W||^2 and its gradient w.r.t. (W, b).

    The bias is not penalized.
    """
    logits = x @ weights + bias
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - log_norm
    n = x.shape[0]
    loss = -np.sum(onehot * log_p) / n + 0.5 * l2_penalty * np.sum(weights * weights)
    resid = (np.exp(log_p) - onehot) / n
    grad_w = x.T @ resid + l2_penalty * weights
    grad_b = resid.sum(axis=0)
    return loss, grad_w, grad_b


def train_logistic(x, y, learning_rate=0.1, l2_penalty=1e-4, epochs=500, seed=0) -> TrainedModel:
    x, y, k = check_training_data(x, y)
    if epochs < 1:
        raise DomainError("epochs must be >= 1")
    onehot = np.eye(k)[y]
    weights = np.zeros((x.shape[1], k))
    bias = np.zeros(k)
    history = np.empty(epochs)
    for epoch in range(epochs):
        # overflow shows up as a non-finite loss, handled below
        with np.errstate(over="ignore", invalid="ignore"):
            loss, gw, gb = loss_and_grad(weights, bias, x, onehot, l2_penalty)
        if not np.isfinite(loss):
            raise DivergenceError(epoch, f"logistic regression: non-finite loss at epoch {epoch}")
        history[epoch] = loss
        weights -= learning_rate * gw
        bias -= learning_rate * gb
    manifest = {
        "learning_rate": learning_rate,
        "l2_penalty": l2_penalty,
        "epochs": epochs,
        "seed": int(seed),
        "final_loss": float(history[-1]),
    }
    return TrainedModel(
        "logistic",
        {"weights": weights, "bias": bias, "loss_history": history},
        k, x.shape[1], manifest,
    )


def score(model: TrainedModel, x) -> np.ndarray:
    return softmax(x @ model.params["weights"] + model.params["bias"])
