import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from stereofuse.errors import ParameterError, ShapeError
from stereofuse.features import census_features, downsample_quarter
from stereofuse.volume import build_correlation_volume


def test_downsample_constant():
    np.testing.assert_array_equal(downsample_quarter(np.full((4, 4), 7.0)), [[7.0]])


def test_downsample_ramp():
    ramp = np.tile(np.arange(8.0), (4, 1))
    np.testing.assert_allclose(downsample_quarter(ramp), [[1.5, 5.5]])


def test_downsample_matches_bilinear_center_sample(rng):
    img = rng.random((8, 12))
    out = downsample_quarter(img)
    for i in range(2):
        for j in range(3):
            # half-pixel center of the cell sits between source pixels 4i+1 and 4i+2
            y, x = 4 * i + 1.5, 4 * j + 1.5
            y0, x0 = int(y), int(x)
            expect = 0.25 * (img[y0, x0] + img[y0 + 1, x0] + img[y0, x0 + 1] + img[y0 + 1, x0 + 1])
            assert out[i, j] == pytest.approx(expect, abs=1e-12)


def test_downsample_nan_propagates():
    img = np.zeros((4, 8))
    img[1, 1] = np.nan
    out = downsample_quarter(img)
    assert np.isnan(out[0, 0]) and out[0, 1] == 0


@pytest.mark.parametrize("shape", [(3, 4), (4, 6), (0, 4)])
def test_downsample_bad_shape(shape):
    with pytest.raises(ShapeError):
        downsample_quarter(np.zeros(shape))


def _census_oracle(img, window):
    h, w = img.shape
    r = window // 2
    out = []
    for y in range(h):
        row = []
        for x in range(w):
            bits = []
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if dy == 0 and dx == 0:
                        continue
                    ny = min(max(y + dy, 0), h - 1)
                    nx = min(max(x + dx, 0), w - 1)
                    bits.append(1 if img[ny, nx] > img[y, x] else -1)
            row.append(bits)
        out.append(row)
    return np.array(out)


@pytest.mark.parametrize("window", [3, 5, 7])
def test_census_matches_loop_oracle(rng, window):
    img = rng.integers(0, 4, (6, 7)).astype(float)
    f = census_features(img, window)
    assert f.shape == (6, 7, window * window - 1)
    np.testing.assert_array_equal(f, _census_oracle(img, window))


def test_census_constant_all_minus_one():
    assert (census_features(np.ones((5, 5)), 5) == -1).all()


def test_census_bright_center():
    img = np.zeros((5, 5))
    img[2, 2] = 1.0
    f = census_features(img, 3)
    # window-3 offsets in raster order without the center: index of offset (dy, dx)
    order = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    for dy, dx in order:
        y, x = 2 - dy, 2 - dx
        bits = f[y, x]
        plus = [order[c] for c in range(8) if bits[c] == 1]
        assert plus == [(dy, dx)]
    assert (f[2, 2] == -1).all()


@pytest.mark.parametrize("window", [2, 4, 1])
def test_census_rejects_bad_window(window):
    with pytest.raises(ParameterError):
        census_features(np.zeros((4, 4)), window)


def test_self_similarity_is_full_length(rng):
    f = census_features(rng.random((4, 6)), 5)
    v = build_correlation_volume(f, f)
    np.testing.assert_array_equal(np.einsum("ijj->ij", v), 24)


images = arrays(np.float64, (5, 6), elements=st.integers(-100, 100).map(float))


@given(images, st.floats(0.01, 50), st.floats(-10, 10))
def test_census_invariant_to_monotone_rescale(img, a, b):
    np.testing.assert_array_equal(census_features(img, 3), census_features(a * img + b, 3))


@given(images, st.floats(-1, 1))
def test_census_invariant_to_cube(img, shift):
    # strictly increasing non-affine map
    np.testing.assert_array_equal(census_features(img, 5), census_features((img + shift) ** 3, 5))


@given(images, images)
def test_dot_equals_length_minus_twice_hamming(a, b):
    fa, fb = census_features(a, 3), census_features(b, 3)
    dot = np.sum(fa.astype(int) * fb, axis=-1)
    ham = np.sum(fa != fb, axis=-1)
    np.testing.assert_array_equal(dot, 8 - 2 * ham)
