"""Quarter-resolution resampling and census descriptors.

The census descriptor stands in for a learned feature encoder. Bits are
encoded as +1/-1 so that the dot product of two descriptors equals
``D - 2 * hamming``.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError


def downsample_quarter(image: np.ndarray) -> np.ndarray:
    """Bilinear 1/4 downsampling (half-pixel centers, no antialiasing).

    Each output pixel is the bilinear sample at the center of its 4x4 source
    cell, i.e. the mean of the cell's central 2x2 pixels. NaN (invalid) inputs
    propagate to the outputs they contribute to.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D map, got shape {image.shape}")
    h, w = image.shape
    if h % 4 or w % 4 or h == 0 or w == 0:
        raise ShapeError(f"dimensions {h}x{w} must be positive multiples of 4")
    cells = image.reshape(h // 4, 4, w // 4, 4)
    center = cells[:, 1:3, :, 1:3]
    return center.mean(axis=(1, 3))


def census_features(image: np.ndarray, window: int = 5) -> np.ndarray:
    """Census transform of a quarter-resolution image.

    Returns an int8 array of shape (H, W, window**2 - 1). Entry is +1 when the
    neighbor is strictly brighter than the center, -1 otherwise. Borders use
    replicated pixels.
    """
    if window % 2 == 0 or window < 3:
        raise ParameterError(f"census window must be odd and >= 3, got {window}")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D image, got shape {image.shape}")
    h, w = image.shape
    r = window // 2
    padded = np.pad(image, r, mode="edge")
    out = np.empty((h, w, window * window - 1), dtype=np.int8)
    c = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            neighbor = padded[r + dy:r + dy + h, r + dx:r + dx + w]
            out[:, :, c] = np.where(neighbor > image, 1, -1)
            c += 1
    return out
