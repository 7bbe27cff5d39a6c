"""Training objectives and their exact gradients.

The Chamfer gradient treats nearest-neighbor matches as fixed (the standard
subgradient of the min), with ties broken toward the lowest point id exactly
as in the distance computation itself.
"""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..geometry import GeometryError, kahan_mean


def chamfer_loss_and_grad(pred: np.ndarray, target: np.ndarray):
    """Chamfer loss between a predicted and a target cloud plus the gradient
    with respect to the predicted coordinates.

    Each predicted point p with nearest target t contributes 2(p-t)/|P|;
    each target q whose nearest predicted point is p adds 2(p-q)/|T| to
    p's row.
    """
    if pred.shape[0] == 0 or target.shape[0] == 0:
        raise GeometryError("chamfer loss requires non-empty clouds")
    pred = np.ascontiguousarray(pred, dtype=np.float64)
    target = np.ascontiguousarray(target, dtype=np.float64)
    idx_pt, sq_pt = _kernels.cross_nn(pred, target)
    idx_tp, sq_tp = _kernels.cross_nn(target, pred)
    loss = kahan_mean(sq_pt) + kahan_mean(sq_tp)
    n, m = pred.shape[0], target.shape[0]
    grad = (2.0 / n) * (pred - target[idx_pt])
    np.add.at(grad, idx_tp, (2.0 / m) * (pred[idx_tp] - target))
    return loss, grad


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over all leading axes; returns (loss, dlogits)."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=-1, keepdims=True)
    flat_probs = probs.reshape(-1, probs.shape[-1])
    flat_labels = labels.reshape(-1)
    count = flat_labels.shape[0]
    picked = flat_probs[np.arange(count), flat_labels]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    dflat = flat_probs.copy()
    dflat[np.arange(count), flat_labels] -= 1.0
    return loss, (dflat / count).reshape(logits.shape)


def logistic_loss(logits: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None):
    """Binary logistic loss with labels y in {-1, +1}; returns
    (loss, dlogits). ``weights`` rebalances classes; they must sum to 1."""
    z = -y * logits
    # stable softplus
    loss_vec = np.logaddexp(0.0, z)
    sig = 1.0 / (1.0 + np.exp(-z))
    if weights is None:
        weights = np.full(logits.shape[0], 1.0 / logits.shape[0])
    loss = float((weights * loss_vec).sum())
    dlogits = weights * (-y) * sig
    return loss, dlogits
