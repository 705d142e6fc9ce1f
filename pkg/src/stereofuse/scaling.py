"""Disparity and confidence from correlation volumes, and monocular scaling.

Everything here runs at quarter resolution. Maps are float64 arrays with NaN
marking invalid pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from .errors import DegenerateInputError, DomainError, ShapeError


@dataclass(frozen=True)
class ScaleShift:
    s: float
    t: float


def softargmax_disparity_left(volume: np.ndarray) -> np.ndarray:
    """``D_L[i,j] = j - sum_k k * softmax_k(V[i,j,:])``."""
    w = volume.shape[2]
    p = softmax(volume, axis=2)
    expected = p @ np.arange(w, dtype=np.float64)
    return np.arange(volume.shape[1], dtype=np.float64)[None, :] - expected


def softargmax_disparity_right(volume: np.ndarray) -> np.ndarray:
    """``D_R[i,k] = sum_j j * softmax_j(V[i,:,k]) - k``."""
    w = volume.shape[1]
    p = softmax(volume, axis=1)
    expected = np.einsum("ijk,j->ik", p, np.arange(w, dtype=np.float64))
    return expected - np.arange(volume.shape[2], dtype=np.float64)[None, :]


def _entropy_confidence(volume: np.ndarray, axis: int) -> np.ndarray:
    n = volume.shape[axis]
    if n < 2:
        raise DomainError("confidence needs at least two disparity hypotheses")
    logp = log_softmax(volume, axis=axis)
    p = np.exp(logp)
    # p * log p -> 0 as p -> 0; logp stays finite so underflowed p contribute 0
    neg_entropy = np.sum(p * logp, axis=axis) / math.log(n)
    conf = 1.0 + neg_entropy
    flat = np.ptp(volume, axis=axis) == 0
    conf[flat] = 0.0
    return np.clip(conf, 0.0, 1.0)


def entropy_confidence_left(volume: np.ndarray) -> np.ndarray:
    """One minus the normalized entropy of each row's softmax over k."""
    return _entropy_confidence(volume, axis=2)


def entropy_confidence_right(volume: np.ndarray) -> np.ndarray:
    """One minus the normalized entropy of each column's softmax over j."""
    return _entropy_confidence(volume, axis=1)


def _sample_rows(values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of ``values[i, x[i, j]]``; NaN outside [0, W-1]."""
    h, w = values.shape
    inside = (x >= 0) & (x <= w - 1)
    xc = np.clip(np.nan_to_num(x, nan=0.0), 0, w - 1)
    x0 = np.floor(xc).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    frac = xc - x0
    rows = np.arange(h)[:, None]
    v0 = values[rows, x0]
    v1 = values[rows, x1]
    # avoid 0 * NaN when the sample sits exactly on a pixel
    out = np.where(frac == 0, v0, (1.0 - frac) * v0 + frac * v1)
    return np.where(inside, out, np.nan)


def warp_right_to_left(disp_left: np.ndarray, right_map: np.ndarray) -> np.ndarray:
    """Sample ``right_map`` at ``(i, j - D_L[i,j])``."""
    disp_left = np.asarray(disp_left, dtype=np.float64)
    right_map = np.asarray(right_map, dtype=np.float64)
    if disp_left.shape != right_map.shape:
        raise ShapeError("disparity and map shapes differ")
    cols = np.arange(disp_left.shape[1], dtype=np.float64)[None, :]
    return _sample_rows(right_map, cols - disp_left)


def warp_left_to_right(disp_right: np.ndarray, left_map: np.ndarray) -> np.ndarray:
    """Sample ``left_map`` at ``(i, k + D_R[i,k])``."""
    disp_right = np.asarray(disp_right, dtype=np.float64)
    left_map = np.asarray(left_map, dtype=np.float64)
    if disp_right.shape != left_map.shape:
        raise ShapeError("disparity and map shapes differ")
    cols = np.arange(disp_right.shape[1], dtype=np.float64)[None, :]
    return _sample_rows(left_map, cols + disp_right)


def softplus_score(diff, t_lrc: float = 1.0):
    """Normalized softplus mapping |diff| = 0 to 1 and large |diff| to 0.

    NaN differences propagate.
    """
    with np.errstate(invalid="ignore"):
        return np.logaddexp(0.0, t_lrc - np.abs(diff)) / np.logaddexp(0.0, t_lrc)


def soft_lrc(disp_left: np.ndarray, disp_right: np.ndarray, t_lrc: float = 1.0) -> np.ndarray:
    """Soft left-right consistency of the left disparity (0 where warp is invalid)."""
    diff = disp_left - warp_right_to_left(disp_left, disp_right)
    score = softplus_score(diff, t_lrc)
    return np.where(np.isfinite(score), score, 0.0)


def soft_lrc_right(disp_right: np.ndarray, disp_left: np.ndarray, t_lrc: float = 1.0) -> np.ndarray:
    """Right-view counterpart of :func:`soft_lrc`."""
    diff = disp_right - warp_left_to_right(disp_right, disp_left)
    score = softplus_score(diff, t_lrc)
    return np.where(np.isfinite(score), score, 0.0)


def _pooled(mono_left, mono_right, disp_left, disp_right, conf_left, conf_right):
    arrays = [np.asarray(a, dtype=np.float64) for a in
              (mono_left, mono_right, disp_left, disp_right, conf_left, conf_right)]
    if len({a.shape for a in arrays}) != 1:
        raise ShapeError("all scaling inputs must share one shape")
    m = np.concatenate([arrays[0].ravel(), arrays[1].ravel()])
    d = np.concatenate([arrays[2].ravel(), arrays[3].ravel()])
    c = np.concatenate([arrays[4].ravel(), arrays[5].ravel()])
    keep = np.isfinite(m) & np.isfinite(d) & np.isfinite(c) & (c > 0)
    return m[keep], d[keep], c[keep]


def scale_shift_objective(s, t, mono_left, mono_right, disp_left, disp_right, conf_left, conf_right) -> float:
    """Confidence-weighted squared residual summed over both views."""
    m, d, c = _pooled(mono_left, mono_right, disp_left, disp_right, conf_left, conf_right)
    r = s * m + t - d
    return math.fsum(c * r * r)


def solve_scale_shift(mono_left, mono_right, disp_left, disp_right, conf_left, conf_right) -> ScaleShift:
    """Joint weighted least-squares fit of ``s * M + t`` to the coarse disparities.

    Confidences act as per-pixel weights; both views share a single (s, t).
    """
    m, d, c = _pooled(mono_left, mono_right, disp_left, disp_right, conf_left, conf_right)
    sw = math.fsum(c)
    swm = math.fsum(c * m)
    swmm = math.fsum(c * m * m)
    swd = math.fsum(c * d)
    swmd = math.fsum(c * m * d)
    det = swmm * sw - swm * swm
    if sw <= 0 or not det > 1e-12 * max(swmm * sw, 1e-300):
        raise DegenerateInputError("scale/shift system is singular (constant mono map or zero weights)")
    s = (sw * swmd - swm * swd) / det
    t = (swmm * swd - swm * swmd) / det
    return ScaleShift(s, t)


def apply_scale_shift(mono: np.ndarray, ss: ScaleShift) -> np.ndarray:
    return ss.s * np.asarray(mono, dtype=np.float64) + ss.t
