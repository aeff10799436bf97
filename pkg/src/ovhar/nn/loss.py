"""Mean squared error over embedding vectors."""

from __future__ import annotations

import numpy as np

from ovhar.errors import ShapeError


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Returns (loss, d_loss/d_pred).

    loss = mean((pred - target)^2); gradient = 2 * (pred - target) / dim.
    """
    if pred.shape != target.shape:
        raise ShapeError("mse operands", expected=list(target.shape), actual=list(pred.shape))
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad


def mse_loss_batch(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over the batch of per-example MSE, with the matching gradient.

    pred, target: [B, dim]. loss = mean_b mean_i (diff^2); gradient has shape
    [B, dim] and equals 2 * diff / (B * dim).
    """
    if pred.shape != target.shape:
        raise ShapeError("mse operands", expected=list(target.shape), actual=list(pred.shape))
    batch, dim = pred.shape
    diff = pred - target
    loss = float(np.mean(np.mean(diff * diff, axis=1)))
    grad = (2.0 / (batch * dim)) * diff
    return loss, grad
