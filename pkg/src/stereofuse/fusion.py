"""Blend of stereo and monocular volumes and final disparity extraction."""

from __future__ import annotations

import numpy as np
from scipy.special import softmax

from .errors import ParameterError, ShapeError
from .scaling import warp_right_to_left


def fuse_volumes(stereo_volume: np.ndarray, mono_volume: np.ndarray, w_mono: float = 0.5) -> np.ndarray:
    """Convex blend of the row-wise softmax of each volume.

    Blending probabilities rather than logits keeps the census scores (up to
    +-D) from swamping the normal scores (+-1 times a gain).
    """
    if stereo_volume.shape != mono_volume.shape:
        raise ShapeError(f"volume shapes differ: {stereo_volume.shape} vs {mono_volume.shape}")
    if not 0.0 <= w_mono <= 1.0:
        raise ParameterError(f"w_mono must lie in [0, 1], got {w_mono}")
    return (1.0 - w_mono) * softmax(stereo_volume, axis=2) + w_mono * softmax(mono_volume, axis=2)


def extract_disparity(volume: np.ndarray, mode: str = "wta", logits: bool = False) -> np.ndarray:
    """Left disparity ``j - k*`` per pixel.

    ``wta`` takes the first (smallest k) maximum. ``softargmax`` takes the
    expectation of k; rows are used as probabilities unless ``logits`` is set,
    in which case a softmax is applied first.
    """
    h, w, n_k = volume.shape
    cols = np.arange(w, dtype=np.float64)[None, :]
    if mode == "wta":
        return cols - np.argmax(volume, axis=2)
    if mode == "softargmax":
        p = softmax(volume, axis=2) if logits else volume
        return cols - p @ np.arange(n_k, dtype=np.float64)
    raise ParameterError(f"unknown extraction mode {mode!r}")


def extract_disparity_right(volume: np.ndarray) -> np.ndarray:
    """Right disparity ``j* - k`` by winner-take-all over the left columns."""
    cols = np.arange(volume.shape[2], dtype=np.float64)[None, :]
    return np.argmax(volume, axis=1) - cols


def _linear_weights(n_out: int, n_in: int) -> np.ndarray:
    """Half-pixel-center linear interpolation matrix with clamped borders."""
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    mat = np.zeros((n_out, n_in))
    np.add.at(mat, (np.arange(n_out), lo), 1.0 - frac)
    np.add.at(mat, (np.arange(n_out), hi), frac)
    return mat


def upsample_disparity(disp: np.ndarray, factor: int = 4) -> np.ndarray:
    """Bilinear upsampling by ``factor`` with disparity values scaled to match."""
    disp = np.asarray(disp, dtype=np.float64)
    h, w = disp.shape
    rows = _linear_weights(h * factor, h)
    cols = _linear_weights(w * factor, w)
    valid = np.isfinite(disp)
    filled = np.where(valid, disp, 0.0)
    out = rows @ filled @ cols.T
    # any invalid contributor invalidates the output pixel
    touched = (rows > 0).astype(np.float64) @ (~valid).astype(np.float64) @ (cols > 0).astype(np.float64).T
    out[touched > 0] = np.nan
    return factor * out


def lr_consistency_filter(disp_left: np.ndarray, disp_right: np.ndarray, tau: float = 1.0) -> np.ndarray:
    """Invalidate (NaN) left pixels whose warped right disparity disagrees by more than ``tau``."""
    disp_left = np.asarray(disp_left, dtype=np.float64)
    warped = warp_right_to_left(disp_left, disp_right)
    keep = np.abs(disp_left - warped) <= tau
    return np.where(keep, disp_left, np.nan)
