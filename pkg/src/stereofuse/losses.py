"""Supervision losses and a finite-difference gradient checker.

Norms are averaged over valid (finite) pixels so loss magnitudes do not
depend on resolution.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, ShapeError
from .scaling import softplus_score
from .volume import compute_normals

BCE_EPS = 1e-7


def _valid_pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and target {gt.shape} differ")
    valid = np.isfinite(pred) & np.isfinite(gt)
    return pred, gt, valid


def l1_loss(pred, gt) -> float:
    pred, gt, valid = _valid_pair(pred, gt)
    if not valid.any():
        return 0.0
    return math.fsum(np.abs(pred[valid] - gt[valid])) / valid.sum()


def sequence_loss(predictions: Sequence[np.ndarray], gt, gamma: float = 0.9) -> float:
    """Exponentially weighted L1 over refinement iterations; the last weighs 1."""
    if len(predictions) == 0:
        raise ParameterError("need at least one prediction")
    n = len(predictions)
    return math.fsum(gamma ** (n - 1 - i) * l1_loss(p, gt) for i, p in enumerate(predictions))


def _normalized_normals(disp, scale):
    return compute_normals(np.asarray(disp, dtype=np.float64) / scale)


def coarse_disparity_loss(pred, gt, psi: float = 10.0) -> float:
    """L1 plus ``psi`` times the mean of ``1 - <n_gt, n_pred>``.

    Both maps are divided by the target's largest valid magnitude before the
    normals are taken, so a constant offset leaves the normal term at zero.
    """
    pred, gt, valid = _valid_pair(pred, gt)
    l1 = l1_loss(pred, gt)
    peak = np.abs(gt[valid]).max() if valid.any() else 0.0
    scale = peak if peak > 0 else 1.0
    # for unit vectors 1 - <a, b> == |a - b|^2 / 2, which is exactly 0 when a == b
    gap = 0.5 * np.sum((_normalized_normals(gt, scale) - _normalized_normals(pred, scale)) ** 2, axis=-1)
    ok = np.isfinite(gap)
    normal_term = math.fsum(gap[ok]) / ok.sum() if ok.any() else 0.0
    return l1 + psi * normal_term


def scaled_mono_loss(pred, gt) -> float:
    return l1_loss(pred, gt)


def confidence_target(pred, gt, t_lrc: float = 1.0) -> np.ndarray:
    """Soft correctness label of each coarse disparity."""
    return softplus_score(np.asarray(pred, dtype=np.float64) - gt, t_lrc)


def binary_cross_entropy(conf, target) -> np.ndarray:
    conf = np.clip(np.asarray(conf, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    return -(target * np.log(conf) + (1.0 - target) * np.log(1.0 - conf))


def confidence_loss(conf, pred, gt, t_lrc: float = 1.0) -> float:
    """Mean BCE between the confidence map and the soft correctness label."""
    conf = np.asarray(conf, dtype=np.float64)
    target = confidence_target(pred, gt, t_lrc)
    valid = np.isfinite(target) & np.isfinite(conf)
    if not valid.any():
        return 0.0
    return math.fsum(binary_cross_entropy(conf[valid], target[valid])) / valid.sum()


def total_loss(parts: Sequence[float]) -> float:
    if len(parts) != 7:
        raise ParameterError(f"expected seven partial losses, got {len(parts)}")
    return math.fsum(parts)


def numerical_gradient(objective: Callable[[np.ndarray], float], point, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    if step <= 0:
        raise ParameterError("step must be positive")
    x = np.atleast_1d(np.asarray(point, dtype=np.float64))
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (objective(x + e) - objective(x - e)) / (2 * step)
    return grad


def finite_difference_check(objective: Callable[[np.ndarray], float], point, step: float = 1e-5,
                            expected=None) -> float:
    """Largest relative disagreement between the numerical gradient and ``expected``.

    With ``expected=None`` the point is checked for stationarity: each gradient
    component is divided by the matching diagonal curvature (floored at 1), which
    is the length of a Newton step away from the point.
    """
    x = np.atleast_1d(np.asarray(point, dtype=np.float64))
    grad = numerical_gradient(objective, x, step)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("objective is not finite around the point")
    if expected is not None:
        expected = np.atleast_1d(np.asarray(expected, dtype=np.float64))
        return float(np.max(np.abs(grad - expected) / np.maximum(1.0, np.abs(expected))))
    f0 = objective(x)
    curv = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        curv[i] = (objective(x + e) - 2 * f0 + objective(x - e)) / step ** 2
    return float(np.max(np.abs(grad) / np.maximum(1.0, np.abs(curv))))
