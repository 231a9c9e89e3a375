"""Bootstrapped cross-entropy + mask-IoU objective with analytic gradients."""

import math
from dataclasses import dataclass

import numpy as np

from .tensor_core import ShapeError, as_tensor, conv2d, sigmoid

PROB_CLAMP = 1e-7
BOOTSTRAP_RATIO = 0.4


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: np.ndarray  # same shape as the prediction


def _check_pair(pred, target):
    pred = as_tensor(pred)
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    if pred.size == 0:
        raise ValueError("empty mask")
    return pred, target


def bootstrap_count(n, ratio):
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"bootstrap ratio must be in (0, 1], got {ratio}")
    # guard against 0.4 * n landing a hair above an integer
    return max(1, min(n, math.ceil(ratio * n - 1e-9)))


def pixel_ce(pred, target):
    p = np.clip(pred, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))


def hardest_pixels(ce, ratio):
    """Flat indices of the ceil(ratio * N) largest values; ties go to lower row-major index."""
    flat = ce.ravel()
    k = bootstrap_count(flat.size, ratio)
    return np.argsort(-flat, kind="stable")[:k]


def bootstrap_ce(pred, target, ratio=BOOTSTRAP_RATIO):
    """Cross-entropy averaged over the hardest ``ratio`` fraction of pixels."""
    pred, target = _check_pair(pred, target)
    ce = pixel_ce(pred, target)
    idx = hardest_pixels(ce, ratio)
    value = float(np.mean(ce.ravel()[idx]))

    p = np.clip(pred, PROB_CLAMP, 1.0 - PROB_CLAMP)
    dce = (-target / p + (1.0 - target) / (1.0 - p)) * ((pred >= PROB_CLAMP) & (pred <= 1.0 - PROB_CLAMP))
    grad = np.zeros(pred.size)
    grad[idx] = dce.ravel()[idx] / idx.size
    return LossResult(value, grad.reshape(pred.shape))


def mask_iou_loss(pred, target):
    """``1 - sum(min(p, t)) / sum(max(p, t))``; 0 when both sums vanish.

    At exact ties p == t both min and max take the target branch, so the
    subgradient there is zero.
    """
    pred, target = _check_pair(pred, target)
    s_min = float(np.sum(np.minimum(pred, target)))
    s_max = float(np.sum(np.maximum(pred, target)))
    if s_max == 0.0:
        return LossResult(0.0, np.zeros_like(pred))
    d_min = (pred < target).astype(np.float64)
    d_max = (pred > target).astype(np.float64)
    grad = -(d_min * s_max - s_min * d_max) / (s_max * s_max)
    return LossResult(1.0 - s_min / s_max, grad)


def total_loss(pred, target, ratio=BOOTSTRAP_RATIO, lam=1.0):
    ce = bootstrap_ce(pred, target, ratio)
    iou = mask_iou_loss(pred, target)
    return LossResult(ce.value + lam * iou.value, ce.grad + lam * iou.grad)


def fit_linear_head(features, target_mask, steps, lr, ratio=BOOTSTRAP_RATIO, lam=1.0):
    """Fit a 1x1 conv + sigmoid head to a mask by plain gradient descent.

    Returns ``((weight (1, D, 1, 1), bias (1,)), loss_trace)`` where the
    trace holds the loss evaluated before each update.
    """
    features = as_tensor(features)
    target_mask = as_tensor(target_mask)
    if steps < 1 or lr < 0:
        raise ValueError("need steps >= 1 and lr >= 0")
    if features.ndim != 3 or target_mask.shape != features.shape[1:]:
        raise ShapeError(f"features {features.shape} and mask {target_mask.shape} are inconsistent")
    d = features.shape[0]
    weight = np.zeros((1, d, 1, 1))
    bias = np.zeros(1)
    trace = []
    for _ in range(steps):
        prob = sigmoid(conv2d(features, weight, bias, pad=0))[0]
        loss = total_loss(prob, target_mask, ratio, lam)
        trace.append(loss.value)
        g_logit = loss.grad * prob * (1.0 - prob)
        weight = weight - lr * np.einsum("hw,dhw->d", g_logit, features).reshape(weight.shape)
        bias = bias - lr * np.array([g_logit.sum()])
    return (weight, bias), trace
