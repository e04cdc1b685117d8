import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_lf
from lfvideo._validation import ShapeError
from lfvideo.core import (
    CENTER_INDEX,
    AngularCoord,
    LightFieldFrame,
    LightFieldVideo,
    angular_grid,
    extract_epi,
    mean_image,
    psnr,
    refocus,
    ssim,
    to_luminance,
    variance_image,
    variance_mask,
)
from oracles import loop_mean, loop_psnr, loop_ssim, loop_variance

unit_floats = st.floats(0.0, 1.0, width=32)


def test_angular_grid_order():
    grid = angular_grid()
    assert len(grid) == 81
    assert grid[CENTER_INDEX] == (0, 0)
    assert grid[0] == (-4, -4) and grid[1] == (-4, -3) and grid[9] == (-3, -4)
    assert all(c.index == i for i, c in enumerate(grid))


@pytest.mark.parametrize("u, v", [(5, 0), (0, -5), (9, 9)])
def test_angular_coord_range(u, v):
    with pytest.raises(ValueError):
        AngularCoord.checked(u, v)


def test_frame_is_read_only_copy(rng):
    arr = rng.random((9, 9, 4, 5, 3), dtype=np.float32)
    lf = LightFieldFrame(arr)
    arr[0, 0, 0, 0, 0] = 7.0
    assert lf.sais[0, 0, 0, 0, 0] != 7.0
    with pytest.raises(ValueError):
        lf.sais[0, 0, 0, 0, 0] = 1.0


def test_frame_views_round_trip(rng):
    views = rng.random((81, 4, 5, 3), dtype=np.float32)
    lf = LightFieldFrame.from_views(views)
    np.testing.assert_array_equal(lf.views(), views)
    for c in angular_grid():
        np.testing.assert_array_equal(lf.sai(c.u, c.v), views[c.index])
    np.testing.assert_array_equal(lf.center, views[CENTER_INDEX])


@pytest.mark.parametrize(
    "shape", [(8, 9, 4, 4, 3), (9, 9, 4, 4, 2), (81, 4, 4, 3)],
)
def test_frame_rejects_bad_shapes(shape):
    with pytest.raises(ShapeError):
        LightFieldFrame(np.zeros(shape, dtype=np.float32))


def test_frame_rejects_nan():
    arr = np.zeros((9, 9, 3, 3, 1), dtype=np.float32)
    arr[1, 1, 1, 1, 0] = np.nan
    with pytest.raises(ValueError):
        LightFieldFrame(arr)


def test_video_requires_increasing_timestamps(rng):
    a = random_lf(rng, 4, 4)
    b = LightFieldFrame(a.sais, timestamp=0)
    with pytest.raises(ValueError):
        LightFieldVideo([a, b])
    vid = LightFieldVideo([a, LightFieldFrame(a.sais, timestamp=1)])
    assert len(vid) == 2
    assert vid.center_frames().shape == (2, 4, 4, 3)


def test_luminance_extremes():
    white = np.ones((2, 2, 3), dtype=np.float32)
    assert np.all(to_luminance(white) == 1.0)
    assert np.all(to_luminance(np.zeros((2, 2, 3))) == 0.0)
    with pytest.raises(ShapeError):
        to_luminance(np.ones((2, 2, 4)))


@given(arrays(np.float32, (3, 4, 3), elements=unit_floats))
def test_luminance_is_weighted_sum(img):
    y = to_luminance(img)
    assert y.shape == (3, 4, 1)
    ref = 0.299 * img[..., 0].astype(np.float64) + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    np.testing.assert_allclose(y[..., 0], ref, atol=1e-6)
    assert y.min() >= 0.0 and y.max() <= 1.0


def test_mean_and_variance_match_loops(rng):
    lf = random_lf(rng, 3, 4, 2 if False else 3)
    np.testing.assert_allclose(mean_image(lf), loop_mean(lf.views()), atol=1e-6)
    np.testing.assert_allclose(variance_image(lf), loop_variance(lf.views()), atol=1e-6)


@given(arrays(np.float32, (4, 5, 1), elements=unit_floats))
def test_constant_light_field_has_zero_variance(img):
    lf = LightFieldFrame(np.broadcast_to(img, (9, 9) + img.shape))
    np.testing.assert_allclose(mean_image(lf), img, atol=1e-6)
    assert np.all(variance_image(lf) == 0.0)


def test_variance_mask_center_and_shift(rng):
    var = rng.random((16, 16, 1))
    masks = variance_mask(var, percentile=90)
    assert masks.shape == (9, 9, 16, 16) and masks.dtype == np.uint8
    thr = np.percentile(var, 90)
    np.testing.assert_array_equal(masks[4, 4], (var[..., 0] > thr).astype(np.uint8))
    # view u=1 sees the variance shifted right by eta = 1 px
    np.testing.assert_array_equal(masks[5, 4][:, 1:], masks[4, 4][:, :-1])
    fixed = variance_mask(var, threshold=0.5)
    np.testing.assert_array_equal(fixed[4, 4], (var[..., 0] > 0.5).astype(np.uint8))


def test_variance_mask_rejects_negative():
    with pytest.raises(ValueError):
        variance_mask(-np.ones((4, 4, 1)))


def test_extract_epi_shapes_and_bounds(rng):
    lf = random_lf(rng, 6, 7)
    epi = extract_epi(lf, row=2, v=0)
    assert epi.shape == (9, 7, 3)
    for i, u in enumerate(range(-4, 5)):
        np.testing.assert_array_equal(epi[i], lf.sai(u, 0)[2])
    assert extract_epi(lf, col=3, u=1).shape == (9, 6, 3)
    with pytest.raises(IndexError):
        extract_epi(lf, row=6)
    with pytest.raises(ValueError):
        extract_epi(lf, row=1, col=1)
    with pytest.raises(ValueError):
        extract_epi(lf, row=1, v=5)


def test_refocus_zero_is_mean(rng):
    lf = random_lf(rng, 8, 8)
    np.testing.assert_array_equal(refocus(lf, 0.0), mean_image(lf))
    with pytest.raises(ValueError):
        refocus(lf, 3.0)


def test_psnr_identity_and_oracle(rng):
    a = rng.random((5, 6, 3))
    assert psnr(a, a) == math.inf
    b = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
    assert abs(psnr(a, b) - loop_psnr(a, b)) < 1e-9
    with pytest.raises(ShapeError):
        psnr(a, b[:, :5])


@given(st.floats(1e-3, 0.5))
def test_psnr_of_constant_offset(delta):
    a = np.zeros((4, 4))
    assert abs(psnr(a, a + delta) - (-20 * math.log10(delta))) < 1e-9


def test_ssim_identity_symmetry_and_oracle(rng):
    a = rng.random((14, 15))
    b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert abs(ssim(a, b) - loop_ssim(a, b)) < 1e-4
    assert -1.0 <= ssim(a, 1 - a) <= 1.0


def test_ssim_input_checks(rng):
    with pytest.raises(ShapeError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))
    with pytest.raises(ShapeError):
        ssim(np.zeros((12, 12, 3)), np.zeros((12, 12, 3)))
