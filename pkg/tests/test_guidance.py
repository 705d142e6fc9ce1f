import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from stereofuse.errors import DegenerateInputError, ParameterError, ShapeError
from stereofuse.guidance import (AugmentSpec, apply_truncation, augment_volume, fuzzy_truncate_mask,
                                 substitute_perfect_mono, truncation_volume)
from stereofuse.scaling import softargmax_disparity_left


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def _mask(m, d, cm, c, t_m=0.98, k=400.0):
    return fuzzy_truncate_mask(np.array([[m]]), np.array([[d]]), np.array([[cm]]), np.array([[c]]), t_m, k)[0, 0]


def test_mask_without_mono_confidence_is_off():
    assert _mask(30.0, 2.0, 0.0, 0.2) < 1e-100


def test_mask_with_unsure_stereo_is_on():
    assert _mask(5.0, 5.0, 1.0, 0.0) == pytest.approx(sigmoid(0.02 * 400), abs=1e-12)
    assert _mask(5.0, 5.0, 1.0, 0.0) == pytest.approx(0.99967, abs=1e-5)


def test_mask_with_confident_closer_stereo_is_off():
    assert _mask(0.0, 10.0, 1.0, 1.0) < 1e-6


def test_mask_matches_fuzzy_logic_oracle(rng):
    m, d, cm, c = rng.uniform(0, 20, 4)
    cm, c = cm / 20, c / 20
    ta = cm * sigmoid(m - d)
    tb = cm * (1 - c)
    tf = 1 - (1 - ta) * (1 - tb)
    assert _mask(m, d, cm, c, 0.5, 3.0) == pytest.approx(sigmoid(3.0 * (tf - 0.5)), abs=1e-12)


@given(arrays(np.float64, (3, 3), elements=st.floats(-50, 50)), arrays(np.float64, (3, 3), elements=st.floats(0, 1)),
       st.floats(0.1, 5.0))
def test_mask_open_unit_interval(diff, conf, k):
    out = fuzzy_truncate_mask(diff, np.zeros((3, 3)), conf, 1 - conf, 0.98, k)
    assert np.all((out > 0) & (out < 1))


def test_truncation_volume_limits():
    mono = np.full((1, 40), 5.0)
    np.testing.assert_array_equal(truncation_volume(np.zeros((1, 40)), mono), 1.0)
    vt = truncation_volume(np.ones((1, 40)), mono, 0.9)
    j = 30
    assert vt[0, j, 39] == pytest.approx(0.9, abs=1e-6)   # k well above j - 5
    assert vt[0, j, 0] == pytest.approx(1.0, abs=1e-6)    # k well below j - 5
    assert vt[0, j, 25] == pytest.approx(0.95, abs=1e-12)


def test_truncation_volume_formula(rng):
    mask = rng.random((2, 5))
    mono = rng.uniform(0, 4, (2, 5))
    vt = truncation_volume(mask, mono, 0.8)
    for i, j, k in np.ndindex(vt.shape):
        gate = sigmoid(j - mono[i, j] - k) * 0.2 + 0.8
        assert vt[i, j, k] == pytest.approx((1 - mask[i, j]) + mask[i, j] * gate, abs=1e-12)


def test_apply_truncation_examples(rng):
    v = rng.standard_normal((2, 4, 4))
    np.testing.assert_array_equal(apply_truncation(v, np.ones_like(v)), v)
    scaled = apply_truncation(v, np.full_like(v, 0.9))
    np.testing.assert_array_equal(np.argmax(scaled, axis=2), np.argmax(v, axis=2))
    with pytest.raises(ShapeError):
        apply_truncation(v, np.ones((2, 4, 3)))


@pytest.mark.parametrize("ratio,flips", [(1.05, True), (1.2, False)])
def test_two_peak_row_flip(ratio, flips):
    w, j, mono = 32, 20, 12.0
    row = np.zeros((1, w, w))
    far_k, mirror_k = 16, 8          # disparities 4 (pierced) and 12 (mirror)
    row[0, j, far_k] = ratio
    row[0, j, mirror_k] = 1.0
    vt = truncation_volume(np.ones((1, w)), np.full((1, w), mono), 0.9)
    out = apply_truncation(row, vt)
    assert (np.argmax(out[0, j]) == mirror_k) == flips
    assert (ratio < 1 / 0.9) == flips


@given(arrays(np.float64, (2, 4, 4), elements=st.floats(-30, 30)), arrays(np.float64, (2, 4), elements=st.floats(0, 1)))
def test_truncation_never_flips_sign_or_grows(v, mask):
    vt = truncation_volume(mask, np.full((2, 4), 1.5), 0.9)
    out = apply_truncation(v, vt)
    assert np.all(np.sign(out) == np.sign(v))
    assert np.all(np.abs(out) <= np.abs(v))


def _all_region(h, w):
    return np.ones((1, h, w), bool)


def test_roll_zero_is_identity(rng):
    v = rng.standard_normal((2, 6, 6))
    np.testing.assert_array_equal(augment_volume(v, _all_region(2, 6), AugmentSpec("roll", roll=0)), v)


def test_roll_three_moves_peak():
    v = np.zeros((1, 8, 8))
    v[0, :, 2] = 40.0
    out = augment_volume(v, _all_region(1, 8), AugmentSpec("roll", roll=3))
    assert (np.argmax(out, axis=2) == 5).all()
    shift = softargmax_disparity_left(out) - softargmax_disparity_left(v)
    np.testing.assert_allclose(shift, -3.0, atol=1e-9)


def test_roll_wraps_and_respects_region():
    v = np.zeros((1, 2, 4))
    v[0, :, 3] = 1.0
    bins = np.array([[[True, False]]])
    out = augment_volume(v, bins, AugmentSpec("roll", roll=2))
    np.testing.assert_array_equal(out[0, 0], [0, 1, 0, 0])
    np.testing.assert_array_equal(out[0, 1], v[0, 1])


def test_noise_seeded_and_bounded(rng):
    v = rng.standard_normal((3, 5, 5))
    bins = np.zeros((2, 3, 5), bool)
    bins[1, 1:] = True
    spec = AugmentSpec("noise", region=1, seed=99)
    a = augment_volume(v, bins, spec)
    b = augment_volume(v, bins, spec)
    assert a.tobytes() == b.tobytes()
    delta = a - v
    assert (delta[~bins[1]] == 0).all()
    assert np.all((delta[bins[1]] >= 0) & (delta[bins[1]] < 1))
    c = augment_volume(v, bins, AugmentSpec("noise", region=1, seed=100))
    assert not np.array_equal(a, c)


def test_zero_gaussian_values():
    v = np.random.default_rng(1).standard_normal((1, 8, 8))
    out = augment_volume(v, _all_region(1, 8), AugmentSpec("zero", amplitude=1.0, sigma=1.0))
    j = 4
    assert out[0, j, j] == pytest.approx(1.0, abs=1e-9)
    assert out[0, j, j - 1] == pytest.approx(math.exp(-0.5), abs=1e-9)
    assert out[0, j, j + 1] == pytest.approx(0.6065, abs=1e-4)


def test_zero_default_amplitude_is_row_max(rng):
    v = rng.standard_normal((1, 4, 4))
    out = augment_volume(v, _all_region(1, 4), AugmentSpec("zero", sigma=2.0))
    for j in range(4):
        for k in range(4):
            assert out[0, j, k] == pytest.approx(v[0, j].max() * math.exp(-((j - k) ** 2) / 8.0), abs=1e-12)


def test_augment_errors():
    with pytest.raises(ParameterError):
        AugmentSpec("shuffle")
    with pytest.raises(ParameterError):
        augment_volume(np.zeros((1, 2, 2)), _all_region(1, 2), AugmentSpec("perfect_mono"))
    with pytest.raises(ParameterError):
        augment_volume(np.zeros((1, 2, 2)), _all_region(1, 2), AugmentSpec("roll", region=3))


def test_perfect_mono_examples(rng):
    np.testing.assert_array_equal(substitute_perfect_mono(np.array([[0.0, 10.0]])), [[0.0, 1.0]])
    gt = rng.uniform(1, 50, (6, 7))
    a = substitute_perfect_mono(gt)
    b = substitute_perfect_mono(3.5 * gt - 2.0)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert a.min() == 0.0 and a.max() == 1.0
    with pytest.raises(DegenerateInputError):
        substitute_perfect_mono(np.full((2, 2), 4.0))
