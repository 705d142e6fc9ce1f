"""Synthetic stereo fixtures with exact ground truth.

Textures are seeded white noise. The right view is rendered from the left
view's disparity with a forward z-buffer (nearest surface wins), so occlusion
masks and right-view disparities come out of the same pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, ShapeError


@dataclass
class StereoFixture:
    left: np.ndarray
    right: np.ndarray
    disparity: np.ndarray
    occlusion: np.ndarray
    disparity_right: np.ndarray


@dataclass
class MirrorFixture:
    left: np.ndarray
    right: np.ndarray
    disparity: np.ndarray
    mono_left: np.ndarray
    mono_right: np.ndarray
    mirror_mask: np.ndarray
    occlusion: np.ndarray


def forward_zbuffer(disp: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project left-view disparities into the right view.

    Returns ``(disp_right, source_col, occluded)`` where ``disp_right`` holds the
    winning (largest) disparity per right pixel (NaN for holes), ``source_col``
    the left column it came from (-1 for holes), and ``occluded`` flags left
    pixels that leave the frame or lose the z-test.
    """
    disp = np.asarray(disp, dtype=np.float64)
    h, w = disp.shape
    cols = np.arange(w)
    target = np.rint(cols[None, :] - disp).astype(np.int64)
    inside = (target >= 0) & (target < w)
    best = np.full((h, w), -np.inf)
    rows = np.broadcast_to(np.arange(h)[:, None], (h, w))
    np.maximum.at(best, (rows[inside], target[inside]), disp[inside])
    source = np.full((h, w), -1, dtype=np.int64)
    for y in range(h):
        # scan left to right so ties resolve to the leftmost source
        for x in np.nonzero(inside[y])[0][::-1]:
            if disp[y, x] == best[y, target[y, x]]:
                source[y, target[y, x]] = x
    occluded = ~inside
    tgt = np.clip(target, 0, w - 1)
    occluded |= disp < best[rows, tgt] - 0.5
    disp_right = np.where(np.isfinite(best), best, np.nan)
    return disp_right, source, occluded


def _fill_small_holes(disp_right: np.ndarray) -> np.ndarray:
    """Fill single-pixel splat gaps between near-equal neighbors (slanted surfaces)."""
    out = disp_right.copy()
    hole = np.isnan(out)
    left = np.roll(out, 1, axis=1)
    right = np.roll(out, -1, axis=1)
    ok = hole & np.isfinite(left) & np.isfinite(right) & (np.abs(left - right) <= 1.5)
    ok[:, 0] = ok[:, -1] = False
    out[ok] = 0.5 * (left[ok] + right[ok])
    return out


def _sample(row: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.interp(x, np.arange(row.size), row)


def make_random_dot_pair(h: int, w: int, disparity, seed: int = 0) -> StereoFixture:
    """Random-dot stereogram for a left-view disparity map (scalar or h x w array)."""
    disp = np.broadcast_to(np.asarray(disparity, dtype=np.float64), (h, w)).copy()
    if np.any(disp < 0) or np.any(disp >= w / 2):
        raise DomainError(f"disparity must lie in [0, {w / 2})")
    rng = np.random.default_rng(seed)
    left = rng.random((h, w))
    fresh = rng.random((h, w))
    disp_right, _, occluded = forward_zbuffer(disp)
    disp_right = _fill_small_holes(disp_right)
    right = fresh.copy()
    cols = np.arange(w, dtype=np.float64)
    for y in range(h):
        seen = np.isfinite(disp_right[y])
        right[y, seen] = _sample(left[y], cols[seen] + disp_right[y, seen])
    return StereoFixture(left, right, disp, occluded, disp_right)


def default_background(h: int, w: int) -> np.ndarray:
    """Piecewise fronto-parallel backdrop: a far wall with two nearer boxes."""
    disp = np.full((h, w), 8.0)
    disp[h // 8:h // 2, w // 16:w // 4] = 20.0
    disp[5 * h // 8:7 * h // 8, 3 * w // 4:15 * w // 16] = 16.0
    return disp


def make_mirror_scene(h: int, w: int, mirror_rect, d_mirror: float, d_virtual: float,
                      seed: int = 0, background=None, surface_texture: float = 0.0,
                      mono_noise: float = 0.01) -> MirrorFixture:
    """Stereo pair in which a mirror shows content consistent at ``d_virtual``.

    ``mirror_rect`` is ``(top, left, bottom, right)`` in left-view pixels
    (exclusive end). Ground truth and the synthetic monocular maps see the
    mirror as an opaque plane at ``d_mirror``. ``surface_texture`` in [0, 1]
    blends in texture attached to the mirror plane itself (dust, print).
    """
    top, x0, bottom, x1 = mirror_rect
    if not (0 <= top < bottom <= h and 0 <= x0 < x1 <= w):
        raise ShapeError(f"mirror rectangle {mirror_rect} lies outside a {h}x{w} image")
    if not d_virtual < d_mirror:
        raise DomainError("virtual content must sit behind the mirror (d_virtual < d_mirror)")
    if not 0.0 <= surface_texture <= 1.0:
        raise ParameterError("surface_texture must lie in [0, 1]")
    gt = default_background(h, w) if background is None else np.array(background, dtype=np.float64)
    if gt.shape != (h, w):
        raise ShapeError("background disparity has the wrong shape")
    mirror = np.zeros((h, w), dtype=bool)
    mirror[top:bottom, x0:x1] = True
    gt[mirror] = d_mirror
    if np.any(gt < 0) or np.any(gt >= w / 2):
        raise DomainError(f"disparity must lie in [0, {w / 2})")

    rng = np.random.default_rng(seed)
    scene = rng.random((h, w))
    reflection = rng.random((h, w))
    surface = rng.random((h, w))
    fresh = rng.random((h, w))

    disp_right, source, occluded = forward_zbuffer(gt)
    disp_right = _fill_small_holes(disp_right)

    left = scene.copy()
    left[mirror] = (1 - surface_texture) * reflection[mirror] + surface_texture * surface[mirror]
    right = fresh.copy()
    cols = np.arange(w, dtype=np.float64)
    rows = np.arange(h)[:, None]
    src = np.clip(source, 0, w - 1)
    on_mirror = (source >= 0) & mirror[rows, src]
    for y in range(h):
        seen = np.isfinite(disp_right[y])
        right[y, seen] = _sample(scene[y], cols[seen] + disp_right[y, seen])
        m = on_mirror[y]
        right[y, m] = ((1 - surface_texture) * _sample(reflection[y], cols[m] + d_virtual)
                       + surface_texture * _sample(surface[y], cols[m] + disp_right[y, m]))

    lo, hi = gt.min(), gt.max()
    span = hi - lo if hi > lo else 1.0
    gt_right = np.where(np.isfinite(disp_right), disp_right, lo)
    mono_left = np.clip((gt - lo) / span + mono_noise * rng.standard_normal((h, w)), 0.0, 1.0)
    mono_right = np.clip((gt_right - lo) / span + mono_noise * rng.standard_normal((h, w)), 0.0, 1.0)
    return MirrorFixture(left, right, gt, mono_left, mono_right, mirror, occluded)


def two_plane_disparity(h: int, w: int, far: float = 8.0, near: float = 16.0) -> np.ndarray:
    """Far fronto-parallel plane with a centered nearer box."""
    disp = np.full((h, w), float(far))
    disp[5 * h // 16:11 * h // 16, 3 * w // 8:3 * w // 4] = float(near)
    return disp
