import numpy as np
import pytest

from stereofuse.cli import _right_view_perfect_mono
from stereofuse.errors import ShapeError
from stereofuse.features import census_features, downsample_quarter
from stereofuse.fusion import upsample_disparity
from stereofuse.guidance import AugmentSpec
from stereofuse.pipeline import PipelineConfig, StageError, normalize_mono_pair, run_pipeline
from stereofuse.scenes import make_mirror_scene, make_random_dot_pair, two_plane_disparity

H, W = 64, 128
MIRROR_RECT = (32, 96, 96, 160)


@pytest.fixture(scope="module")
def dots():
    gt = two_plane_disparity(H, W)
    fx = make_random_dot_pair(H, W, gt, seed=1)
    ml, mr = _right_view_perfect_mono(gt)
    return fx, ml, mr


@pytest.fixture(scope="module")
def mirror():
    return make_mirror_scene(128, 256, MIRROR_RECT, 12.0, 4.0, seed=3)


def test_shape_checks_run_before_compute():
    a = np.zeros((8, 8))
    with pytest.raises(ShapeError):
        run_pipeline(a, a, a, np.zeros((8, 12)))
    b = np.zeros((6, 8))
    with pytest.raises(ShapeError):
        run_pipeline(b, b, b, b)


def test_stage_errors_carry_label(dots):
    fx, _, _ = dots
    flat = np.full((H, W), 0.5)
    with pytest.raises(StageError) as info:
        run_pipeline(fx.left, fx.right, flat, flat)
    assert info.value.stage == "scaling"
    with pytest.raises(StageError) as info:
        run_pipeline(fx.left, fx.right, flat, flat, PipelineConfig(census_window=4))
    assert info.value.stage == "stereo_volume"


def test_stereo_only_equals_census_wta(dots):
    fx, ml, mr = dots
    result = run_pipeline(fx.left, fx.right, ml, mr, PipelineConfig(w_mono=0.0, truncation=False))
    fl = census_features(downsample_quarter(fx.left), 5).astype(int)
    fr = census_features(downsample_quarter(fx.right), 5).astype(int)
    h, w, _ = fl.shape
    best = np.empty((h, w))
    for i in range(h):
        scores = fl[i] @ fr[i].T
        best[i] = np.arange(w) - np.argmax(scores, axis=1)
    np.testing.assert_array_equal(result.disparity, upsample_disparity(best))


def test_timings_and_stages(dots):
    fx, ml, mr = dots
    result = run_pipeline(fx.left, fx.right, ml, mr, keep_stages=True)
    assert list(result.timings) == ["downsample", "stereo_volume", "mono_volume", "scaling", "truncation",
                                    "fusion", "upsample"]
    assert result.stages["stereo_volume"].shape == (H // 4, W // 4, W // 4)
    assert result.disparity.shape == (H, W)


def test_runs_are_bit_identical(dots):
    fx, ml, mr = dots
    cfg = PipelineConfig(augment=AugmentSpec("noise", region=0, seed=5))
    a = run_pipeline(fx.left, fx.right, ml, mr, cfg)
    b = run_pipeline(fx.left, fx.right, ml, mr, cfg)
    assert a.disparity.tobytes() == b.disparity.tobytes()
    assert a.scale_shift == b.scale_shift


def test_augment_targets_and_lr_filter(dots):
    fx, ml, mr = dots
    base = run_pipeline(fx.left, fx.right, ml, mr, keep_stages=True)
    spec = AugmentSpec("roll", region=7, roll=3)
    on_mono = run_pipeline(fx.left, fx.right, ml, mr, PipelineConfig(augment=spec, augment_target="mono"),
                           keep_stages=True)
    assert not np.array_equal(on_mono.stages["mono_volume"], base.stages["mono_volume"])
    np.testing.assert_array_equal(on_mono.stages["stereo_volume"], base.stages["stereo_volume"])
    with pytest.raises(StageError):
        run_pipeline(fx.left, fx.right, ml, mr, PipelineConfig(augment=spec, augment_target="both"))
    filtered = run_pipeline(fx.left, fx.right, ml, mr, PipelineConfig(lr_filter=True))
    assert np.isnan(filtered.disparity).any() and np.isfinite(filtered.disparity).any()


def test_mono_normalization():
    a, b = np.array([[2.0, 4.0]]), np.array([[3.0, 6.0]])
    na, nb = normalize_mono_pair(a, b)
    np.testing.assert_allclose(na, [[0.0, 0.5]])
    np.testing.assert_allclose(nb, [[0.25, 1.0]])
    inside = np.array([[0.2, 0.3]])
    assert normalize_mono_pair(inside, inside)[0] is inside


def test_mirror_stereo_alone_pierces(mirror):
    result = run_pipeline(mirror.left, mirror.right, mirror.mono_left, mirror.mono_right,
                          PipelineConfig(w_mono=0.0, truncation=False))
    assert np.median(result.disparity[mirror.mirror_mask]) == 4.0


def test_mirror_mono_branch_sees_the_plane(mirror):
    result = run_pipeline(mirror.left, mirror.right, mirror.mono_left, mirror.mono_right, keep_stages=True)
    inside = mirror.mirror_mask[1::4, 1::4]
    scaled = 4 * result.stages["scaled_mono_left"][inside]
    coarse = 4 * result.stages["coarse_left"][inside]
    assert abs(np.median(scaled) - 12.0) < 1.0
    assert abs(np.median(coarse) - 12.0) < 1.0


def test_mirror_outside_agrees_with_truth(mirror):
    result = run_pipeline(mirror.left, mirror.right, mirror.mono_left, mirror.mono_right, keep_stages=True)
    outside = ~mirror.mirror_mask & ~mirror.occlusion
    assert np.median(np.abs(result.disparity - mirror.disparity)[outside]) <= 1.0
    gt_q = mirror.disparity[1::4, 1::4]
    out_q = outside[1::4, 1::4]
    scaled = 4 * result.stages["scaled_mono_left"]
    assert np.median(np.abs(scaled - gt_q)[out_q]) <= 1.0


@pytest.mark.xfail(strict=True, reason="normal-only mono volume cannot localize matches precisely enough "
                                        "for an exact affine fit; see decisions ledger")
def test_perfect_mono_recovers_exact_scale(dots):
    fx, ml, mr = dots
    gt = fx.disparity
    result = run_pipeline(fx.left, fx.right, ml, mr, PipelineConfig(w_mono=1.0))
    ss = result.scale_shift
    recovered = 4 * (ss.s * ml + ss.t)
    assert np.mean(np.abs(recovered - gt)) < 1e-3
