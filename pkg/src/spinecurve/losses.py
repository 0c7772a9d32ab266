"""Reference implementations of the landmark-network training losses.

These operate on plain arrays and on decoded spines; there is no autodiff.
They exist to check an external training pipeline against known values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnosis import constraint_violation
from .errors import ShapeMismatch, ValidationError
from .landmarks import Spine


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 0.05
    lambda3: float = 0.05
    # weight of a peak pixel (h = 1) relative to background
    tau: float = 10.0
    eps_deg: float = 5.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValidationError("loss weights must be non-negative")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.eps_deg < 0:
            raise ValidationError("eps_deg must be >= 0")


def _pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != target shape {gt.shape}")
    if pred.size == 0:
        raise ShapeMismatch("empty arrays")
    return pred, gt


def heatmap_loss(pred, gt, tau: float = 10.0) -> float:
    """Mean of ``(pred - gt)**2 * tau**gt``, which up-weights pixels near landmarks."""
    pred, gt = _pair(pred, gt)
    return float(np.mean((pred - gt) ** 2 * np.power(tau, gt)))


def vector_loss(pred, gt) -> float:
    pred, gt = _pair(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


def constraint_loss(spine: Spine, eps_deg: float = 5.0) -> float:
    return constraint_violation(spine, eps_deg)[0]


def total_loss(h_pred, h_gt, v_pred, v_gt, spine_pred: Spine, w: LossWeights = LossWeights()) -> float:
    return (
        w.lambda1 * heatmap_loss(h_pred, h_gt, w.tau)
        + w.lambda2 * vector_loss(v_pred, v_gt)
        + w.lambda3 * constraint_loss(spine_pred, w.eps_deg)
    )
