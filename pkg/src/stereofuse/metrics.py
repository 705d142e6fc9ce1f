"""Disparity and depth evaluation measures, plus affine alignment for
affine-invariant predictions (least squares or RANSAC)."""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateInputError, DomainError, ShapeError

RANSAC_ITERATIONS = 500
RANSAC_THRESHOLD = 0.05  # fraction of the target median


class EmptyRegionError(DomainError):
    """A metric was requested over a region with no pixels."""


def _region(pred, gt, region, require_pred=True):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and target {gt.shape} differ")
    mask = np.isfinite(gt)
    if require_pred:
        mask &= np.isfinite(pred)
    if region is not None:
        region = np.asarray(region, dtype=bool)
        if region.shape != gt.shape:
            raise ShapeError("region mask has the wrong shape")
        mask &= region
    if not mask.any():
        raise EmptyRegionError("metric region is empty")
    return pred[mask], gt[mask]


def bad_tau(pred, gt, region=None, tau: float = 2.0) -> float:
    """Percentage of region pixels with absolute error above ``tau``.

    Pixels without a (finite) prediction count as bad.
    """
    p, g = _region(pred, gt, region, require_pred=False)
    err = np.abs(p - g)
    return 100.0 * np.count_nonzero(~(err <= tau)) / p.size


def avg_error(pred, gt, region=None) -> float:
    """Mean absolute error over region pixels that carry a prediction."""
    p, g = _region(pred, gt, region)
    return math.fsum(np.abs(p - g)) / p.size


def region_split(valid, occlusion=None):
    """``(all, noc, occ)`` masks from the target's valid mask and an occlusion mask."""
    valid = np.asarray(valid, dtype=bool)
    if occlusion is None:
        occ = np.zeros_like(valid)
    else:
        occ = np.asarray(occlusion, dtype=bool)
        if occ.shape != valid.shape:
            raise ShapeError("occlusion mask has the wrong shape")
    return valid.copy(), valid & ~occ, valid & occ


def depth_metrics(pred, gt, region=None) -> dict[str, float]:
    """AbsRel (%), RMSE and the delta < 1.05 score (%)."""
    p, g = _region(pred, gt, region)
    if np.any(g <= 0):
        raise DomainError("depth ground truth must be positive")
    diff = p - g
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.maximum(p / g, g / p)
    return {
        "absrel_pct": 100.0 * math.fsum(np.abs(diff) / g) / g.size,
        "rmse": math.sqrt(math.fsum(diff * diff) / g.size),
        "delta105_pct": 100.0 * np.count_nonzero(ratio < 1.05) / g.size,
    }


def _lsq(x, y):
    n = x.size
    sx, sy = math.fsum(x), math.fsum(y)
    sxx, sxy = math.fsum(x * x), math.fsum(x * y)
    det = n * sxx - sx * sx
    if not det > 1e-12 * max(n * sxx, 1e-300):
        raise DegenerateInputError("prediction is constant over the fit region")
    return (n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det


def fit_affine(pred, gt, protocol: str = "lsq", seed: int = 0, region=None) -> tuple[float, float]:
    """Scale and shift mapping ``pred`` onto ``gt``."""
    p, g = _region(pred, gt, region)
    if np.unique(p).size < 2:
        raise DegenerateInputError("need at least two distinct prediction values")
    if protocol == "lsq":
        return _lsq(p, g)
    if protocol != "ransac":
        raise ValueError(f"unknown alignment protocol {protocol!r}")
    rng = np.random.default_rng(seed)
    threshold = RANSAC_THRESHOLD * abs(float(np.median(g)))
    best = None
    best_count = -1
    for _ in range(RANSAC_ITERATIONS):
        a, b = rng.choice(p.size, size=2, replace=False)
        if p[a] == p[b]:
            continue
        s = (g[a] - g[b]) / (p[a] - p[b])
        t = g[a] - s * p[a]
        inliers = np.abs(s * p + t - g) <= threshold
        count = int(inliers.sum())
        if count > best_count:
            best, best_count = inliers, count
    if best is None or best_count < 2:
        raise DegenerateInputError("RANSAC found no usable hypothesis")
    return _lsq(p[best], g[best])


def align_affine(pred, gt, protocol: str = "lsq", seed: int = 0, region=None) -> np.ndarray:
    s, t = fit_affine(pred, gt, protocol, seed, region)
    return s * np.asarray(pred, dtype=np.float64) + t


def disparity_report(pred, gt, occlusion=None, taus=(2.0,)) -> dict[str, float]:
    """bad-tau over All/Noc/Occ for each tau plus the average error over All.

    Regions with no pixels are omitted.
    """
    gt = np.asarray(gt, dtype=np.float64)
    regions = dict(zip(("all", "noc", "occ"), region_split(np.isfinite(gt), occlusion)))
    out = {}
    for tau in taus:
        name = f"{tau:g}".replace(".", "p")
        for label, mask in regions.items():
            try:
                out[f"bad{name}_{label}"] = bad_tau(pred, gt, mask, tau)
            except EmptyRegionError:
                continue
    out["avg_px"] = avg_error(pred, gt, regions["all"])
    return out
