"""Correlation volumes over stereo features and monocular normals.

Volumes are float64 arrays of shape (H, W, W) indexed ``[i, j, k]`` where ``j``
is the left-view column and ``k`` the right-view column of the same row.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import DomainError, ParameterError, ShapeError


def build_correlation_volume(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """All-pairs dot product along each row: ``V[i,j,k] = <L[i,j,:], R[i,k,:]>``.

    ``left`` and ``right`` are (H, W, C) channel-last descriptor arrays (census
    features or normal maps).
    """
    left = np.asarray(left)
    right = np.asarray(right)
    if left.ndim != 3 or left.shape != right.shape:
        raise ShapeError(f"feature maps must share an (H, W, C) shape, got {left.shape} and {right.shape}")
    return np.einsum("ijh,ikh->ijk", left.astype(np.float64), right.astype(np.float64))


def normal_gain(width: int) -> float:
    """Gain applied to depth before differentiation; proportional to width."""
    return width / 10.0


def compute_normals(depth: np.ndarray) -> np.ndarray:
    """Unit normal map (H, W, 3) of a normalized quarter-resolution depth map.

    Uses ``(-d(gM)/dx, -d(gM)/dy, 1)`` with ``g = W/10``, central differences in
    the interior and one-sided differences on the border. Pixels whose gradient
    is not finite get NaN normals.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2 or depth.shape[0] < 3 or depth.shape[1] < 3:
        raise ShapeError(f"normals need at least a 3x3 map, got {depth.shape}")
    scaled = normal_gain(depth.shape[1]) * depth
    gy, gx = np.gradient(scaled)
    raw = np.stack([-gx, -gy, np.ones_like(gx)], axis=-1)
    return raw / np.linalg.norm(raw, axis=-1, keepdims=True)


def depth_bin_masks(depth: np.ndarray, n_bins: int = 8) -> np.ndarray:
    """Boolean masks (N, H, W) with pixel in bin n iff n/N <= M < (n+1)/N.

    M == 1 falls in the top bin; NaN pixels fall in none.
    """
    if n_bins < 1:
        raise ParameterError(f"need at least one bin, got {n_bins}")
    depth = np.asarray(depth, dtype=np.float64)
    valid = np.isfinite(depth)
    values = depth[valid]
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise DomainError("depth must be normalized to [0, 1] before binning")
    idx = np.full(depth.shape, -1, dtype=np.int64)
    b = np.floor(values * n_bins).astype(np.int64)
    # correct floor() rounding so the comparison n/N <= M < (n+1)/N is exact
    b -= values < b / n_bins
    b += values >= (b + 1) / n_bins
    idx[valid] = np.minimum(b, n_bins - 1)
    return idx[None, :, :] == np.arange(n_bins)[:, None, None]


def mask_volume(volume: np.ndarray, left_masks: np.ndarray, right_masks: np.ndarray, n: int) -> np.ndarray:
    """Keep only correlations where both pixels fall in depth bin ``n``."""
    if not 0 <= n < left_masks.shape[0]:
        raise IndexError(f"bin {n} out of range for {left_masks.shape[0]} bins")
    h, w, k = volume.shape
    if left_masks.shape[1:] != (h, w) or right_masks.shape[1:] != (h, k):
        raise ShapeError("bin masks do not match the volume")
    lm = left_masks[n].astype(volume.dtype)
    rm = right_masks[n].astype(volume.dtype)
    return lm[:, :, None] * rm[:, None, :] * volume


def aggregate_mono_volumes(masked, beta: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """Training-free stand-in for the learned 3D regularization.

    Sums the per-bin masked volumes, smooths each k-slab with a 3x3
    edge-replicated box filter over (i, j) and multiplies by the sharpness gain
    ``beta``. The same volume serves as the disparity and confidence volume.
    """
    masked = list(masked)
    if not masked:
        raise ParameterError("need at least one masked volume")
    shape = masked[0].shape
    if any(v.shape != shape for v in masked):
        raise ShapeError("masked volumes must share one shape")
    total = np.sum(masked, axis=0)
    smoothed = uniform_filter(total, size=(3, 3, 1), mode="nearest")
    vd = beta * smoothed
    return vd, vd.copy()
