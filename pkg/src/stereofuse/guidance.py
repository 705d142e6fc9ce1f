"""Mirror-aware truncation of the stereo volume and volume augmentations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DegenerateInputError, ParameterError, ShapeError

AUGMENT_KINDS = ("roll", "noise", "zero", "perfect_mono")


def fuzzy_truncate_mask(mono_disp, stereo_disp, mono_conf, stereo_conf,
                        t_m: float = 0.98, k_sharp: float = 400.0) -> np.ndarray:
    """Soft ``(mono > stereo and mono_conf) or (mono_conf and not stereo_conf)``, thresholded at ``t_m``.

    AND is a product, OR is ``a + b - ab``, NOT is ``1 - a`` and ``>`` is a
    sigmoid of the difference. The threshold is applied with a sigmoid of gain
    ``k_sharp``.
    """
    mono_conf = np.asarray(mono_conf, dtype=np.float64)
    t_a = mono_conf * expit(np.asarray(mono_disp, dtype=np.float64) - stereo_disp)
    t_b = mono_conf * (1.0 - np.asarray(stereo_conf, dtype=np.float64))
    t_f = t_a + t_b - t_a * t_b
    return expit(k_sharp * (t_f - t_m))


def truncation_volume(mask: np.ndarray, mono_disp: np.ndarray, g: float = 0.9) -> np.ndarray:
    """Per-pixel multiplicative gate over k.

    Where the mask is on, hypotheses behind the monocular disparity (larger k)
    are scaled toward ``g``; hypotheses in front stay near 1.
    """
    mask = np.asarray(mask, dtype=np.float64)
    mono_disp = np.asarray(mono_disp, dtype=np.float64)
    if mask.shape != mono_disp.shape:
        raise ShapeError("mask and mono disparity shapes differ")
    h, w = mask.shape
    j = np.arange(w, dtype=np.float64)[None, :, None]
    k = np.arange(w, dtype=np.float64)[None, None, :]
    gate = expit(j - mono_disp[:, :, None] - k) * (1.0 - g) + g
    m = mask[:, :, None]
    return (1.0 - m) + m * gate


def apply_truncation(stereo_volume: np.ndarray, trunc_volume: np.ndarray) -> np.ndarray:
    if stereo_volume.shape != trunc_volume.shape:
        raise ShapeError(f"volume shapes differ: {stereo_volume.shape} vs {trunc_volume.shape}")
    return stereo_volume * trunc_volume


@dataclass(frozen=True)
class AugmentSpec:
    """One volume augmentation applied to the pixels of a single depth bin.

    ``amplitude=None`` makes zeroing use each row's own maximum.
    """

    kind: str
    region: int = 0
    seed: int = 0
    roll: int = 0
    amplitude: float | None = None
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in AUGMENT_KINDS:
            raise ParameterError(f"unknown augmentation {self.kind!r}; expected one of {AUGMENT_KINDS}")
        if self.sigma <= 0:
            raise ParameterError("zeroing width must be positive")


def augment_volume(volume: np.ndarray, bin_masks: np.ndarray, spec: AugmentSpec) -> np.ndarray:
    """Apply ``spec`` to the rows of ``volume`` whose left pixel lies in bin ``spec.region``."""
    if spec.kind == "perfect_mono":
        raise ParameterError("perfect_mono acts on the monocular map; use substitute_perfect_mono")
    if not 0 <= spec.region < bin_masks.shape[0]:
        raise ParameterError(f"region bin {spec.region} out of range")
    region = bin_masks[spec.region]
    if region.shape != volume.shape[:2]:
        raise ShapeError("bin masks do not match the volume")
    out = volume.copy()
    if spec.kind == "roll":
        out[region] = np.roll(volume[region], spec.roll, axis=-1)
    elif spec.kind == "noise":
        rng = np.random.Generator(np.random.Philox(spec.seed))
        noise = rng.random(volume.shape)
        out[region] += noise[region]
    else:
        h, w, n_k = volume.shape
        d = np.arange(w)[:, None] - np.arange(n_k)[None, :]
        curve = np.exp(-(d * d) / (2.0 * spec.sigma ** 2))
        if spec.amplitude is None:
            amp = volume.max(axis=2)
        else:
            amp = np.full((h, w), float(spec.amplitude))
        zeroed = amp[:, :, None] * curve[None, :, :]
        out[region] = zeroed[region]
    return out


def substitute_perfect_mono(gt_disparity: np.ndarray) -> np.ndarray:
    """Min-max normalize a ground-truth disparity map to [0, 1] over valid pixels."""
    gt = np.asarray(gt_disparity, dtype=np.float64)
    valid = np.isfinite(gt)
    if not valid.any():
        raise DegenerateInputError("ground truth has no valid pixels")
    lo, hi = gt[valid].min(), gt[valid].max()
    if hi == lo:
        raise DegenerateInputError("ground truth is constant")
    out = (gt - lo) / (hi - lo)
    # exact extremes despite rounding in the division
    out[valid & (gt == lo)] = 0.0
    out[valid & (gt == hi)] = 1.0
    return out
