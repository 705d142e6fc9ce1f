"""End-to-end stereo/mono fusion on in-memory arrays."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np

from . import features, fusion, guidance, scaling, volume
from .errors import DomainError, ParameterError, ShapeError, StereoFuseError

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    n_bins: int = 8
    t_lrc: float = 1.0
    t_m: float = 0.98
    k_sharp: float = 400.0
    g: float = 0.9
    w_mono: float = 0.5
    beta: float = 10.0
    census_window: int = 5
    mode: str = "wta"
    lrc_tau: float = 1.0
    lr_filter: bool = False
    truncation: bool = True
    seed: int = 0
    augment: guidance.AugmentSpec | None = None
    augment_target: str = "stereo"

    def as_dict(self) -> dict:
        out = asdict(self)
        out["augment"] = None if self.augment is None else asdict(self.augment)
        return out


@dataclass
class PipelineResult:
    disparity: np.ndarray
    scale_shift: scaling.ScaleShift
    timings: dict[str, float] = field(default_factory=dict)
    stages: dict[str, np.ndarray] = field(default_factory=dict)


class StageError(StereoFuseError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def normalize_mono_pair(mono_left: np.ndarray, mono_right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map both monocular maps to [0, 1] with one shared affine map if needed.

    Maps already inside [0, 1] are returned unchanged; a shared transform keeps
    the two views on a common scale for the joint fit.
    """
    both = np.concatenate([mono_left[np.isfinite(mono_left)], mono_right[np.isfinite(mono_right)]])
    if both.size == 0:
        raise DomainError("monocular maps have no valid pixels")
    lo, hi = both.min(), both.max()
    if lo >= 0.0 and hi <= 1.0:
        return mono_left, mono_right
    if hi == lo:
        return np.zeros_like(mono_left), np.zeros_like(mono_right)
    return (mono_left - lo) / (hi - lo), (mono_right - lo) / (hi - lo)


def _fill_invalid(arr: np.ndarray) -> np.ndarray:
    """Replace NaN pixels by the nearest valid value along the row."""
    out = arr.copy()
    for row in out:
        bad = ~np.isfinite(row)
        if bad.all():
            row[:] = 0.0
        elif bad.any():
            idx = np.arange(row.size)
            row[bad] = np.interp(idx[bad], idx[~bad], row[~bad])
    return out


def run_pipeline(left, right, mono_left, mono_right, config: PipelineConfig | None = None,
                 keep_stages: bool = False) -> PipelineResult:
    """Estimate full-resolution left disparity from a stereo pair and two monocular maps."""
    cfg = config or PipelineConfig()
    arrays = [np.asarray(a, dtype=np.float64) for a in (left, right, mono_left, mono_right)]
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"input maps disagree in shape: {sorted(shapes)}")
    h, w = arrays[0].shape
    if h % 4 or w % 4:
        raise ShapeError(f"input size {h}x{w} must be divisible by 4")
    left, right, mono_left, mono_right = arrays

    timings: dict[str, float] = {}
    stages: dict[str, np.ndarray] = {}

    @contextmanager
    def stage(name):
        start = time.perf_counter()
        try:
            yield
        except StereoFuseError as exc:
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc
        finally:
            timings[name] = time.perf_counter() - start

    with stage("downsample"):
        left_q = _fill_invalid(features.downsample_quarter(left))
        right_q = _fill_invalid(features.downsample_quarter(right))
        ml, mr = normalize_mono_pair(_fill_invalid(mono_left), _fill_invalid(mono_right))
        ml_q = features.downsample_quarter(ml)
        mr_q = features.downsample_quarter(mr)

    with stage("stereo_volume"):
        fl = features.census_features(left_q, cfg.census_window)
        fr = features.census_features(right_q, cfg.census_window)
        v_s = volume.build_correlation_volume(fl, fr)

    with stage("mono_volume"):
        v_m = volume.build_correlation_volume(volume.compute_normals(ml_q), volume.compute_normals(mr_q))
        bins_l = volume.depth_bin_masks(ml_q, cfg.n_bins)
        bins_r = volume.depth_bin_masks(mr_q, cfg.n_bins)
        masked = [volume.mask_volume(v_m, bins_l, bins_r, n) for n in range(cfg.n_bins)]
        v_dm, v_cm = volume.aggregate_mono_volumes(masked, cfg.beta)

    if cfg.augment is not None:
        with stage("augment"):
            if cfg.augment_target == "stereo":
                v_s = guidance.augment_volume(v_s, bins_l, cfg.augment)
            elif cfg.augment_target == "mono":
                v_dm = guidance.augment_volume(v_dm, bins_l, cfg.augment)
            else:
                raise ParameterError(f"augment target must be 'stereo' or 'mono', got {cfg.augment_target!r}")

    with stage("scaling"):
        d_l = scaling.softargmax_disparity_left(v_dm)
        d_r = scaling.softargmax_disparity_right(v_dm)
        c_l = scaling.entropy_confidence_left(v_cm)
        c_r = scaling.entropy_confidence_right(v_cm)
        w_l = c_l * scaling.soft_lrc(d_l, d_r, cfg.t_lrc)
        w_r = c_r * scaling.soft_lrc_right(d_r, d_l, cfg.t_lrc)
        ss = scaling.solve_scale_shift(ml_q, mr_q, d_l, d_r, w_l, w_r)
        mhat_l = scaling.apply_scale_shift(ml_q, ss)
        mhat_r = scaling.apply_scale_shift(mr_q, ss)
        log.debug("scale %.6g shift %.6g", ss.s, ss.t)

    with stage("truncation"):
        if cfg.truncation:
            c_m = scaling.soft_lrc(mhat_l, mhat_r, cfg.t_lrc)
            t_mask = guidance.fuzzy_truncate_mask(mhat_l, d_l, c_m, c_l, cfg.t_m, cfg.k_sharp)
            v_t = guidance.truncation_volume(t_mask, mhat_l, cfg.g)
            v_s_trunc = guidance.apply_truncation(v_s, v_t)
        else:
            t_mask = np.zeros_like(d_l)
            v_s_trunc = v_s

    with stage("fusion"):
        fused = fusion.fuse_volumes(v_s_trunc, v_dm, cfg.w_mono)
        disp_q = fusion.extract_disparity(fused, cfg.mode)

    with stage("upsample"):
        if cfg.lr_filter:
            disp_rq = fusion.extract_disparity_right(fused)
            disp_q = fusion.lr_consistency_filter(disp_q, disp_rq, cfg.lrc_tau)
        disp = fusion.upsample_disparity(disp_q)

    if keep_stages:
        stages.update(
            left_q=left_q, right_q=right_q, mono_left_q=ml_q, mono_right_q=mr_q,
            coarse_left=d_l, coarse_right=d_r, conf_left=c_l, conf_right=c_r,
            scaled_mono_left=mhat_l, scaled_mono_right=mhat_r, truncate_mask=t_mask,
            disparity_quarter=disp_q, stereo_volume=v_s, mono_volume=v_dm, fused_volume=fused,
        )
    return PipelineResult(disp, ss, timings, stages)
