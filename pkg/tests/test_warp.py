import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lfvideo._validation import ShapeError
from lfvideo.core import LightFieldFrame
from lfvideo.nn import Tensor
from lfvideo.warp import (
    bilinear_warp,
    bilinear_warp_backward,
    shift_input,
    temporal_error,
    valid_mask,
    warp_tensor,
)
from oracles import loop_warp, numeric_grad, rel_error

small = st.floats(-3.0, 3.0)


def away_from_integers(rng, shape, scale=2.5):
    # keep sample positions off the kinks of the bilinear kernel
    f = rng.uniform(-scale, scale, shape)
    return np.floor(f) + rng.uniform(0.2, 0.8, shape)


@given(arrays(np.float64, (5, 6, 2), elements=st.floats(0, 1)))
def test_zero_flow_is_identity(img):
    out = bilinear_warp(img, np.zeros((5, 6, 2)))
    np.testing.assert_array_equal(out, img)


@pytest.mark.parametrize("dx, dy", [(1, 0), (0, 2), (-2, 1), (3, -3)])
def test_integer_flow_is_exact_shift(rng, dx, dy):
    img = rng.random((10, 11, 3))
    flow = np.broadcast_to(np.array([dx, dy], dtype=np.float64), (10, 11, 2))
    out = bilinear_warp(img, flow)
    ys = slice(max(0, -dy), 10 - max(0, dy))
    xs = slice(max(0, -dx), 11 - max(0, dx))
    src = img[max(0, dy) : 10 + min(0, dy), max(0, dx) : 11 + min(0, dx)]
    np.testing.assert_array_equal(out[ys, xs], src)


def test_warp_matches_loop_oracle(rng):
    for _ in range(20):
        img = rng.random((6, 7, 2))
        flow = rng.uniform(-4, 4, (6, 7, 2))  # includes clamped samples
        np.testing.assert_allclose(bilinear_warp(img, flow), loop_warp(img, flow), atol=1e-12)


def test_warp_backward_src_is_adjoint(rng):
    img = rng.random((6, 7, 3))
    flow = rng.uniform(-3, 3, (6, 7, 2))
    g = rng.standard_normal((6, 7, 3))
    gsrc, _ = bilinear_warp_backward(img, flow, g)
    probe = rng.standard_normal(img.shape)
    # warp is linear in src, so <warp(probe), g> == <probe, grad_src>
    assert np.sum(bilinear_warp(probe, flow) * g) == pytest.approx(np.sum(probe * gsrc), rel=1e-10)


def test_warp_backward_flow_finite_differences(rng):
    img = rng.random((7, 8, 2))
    flow = away_from_integers(rng, (7, 8, 2))
    # keep every sample inside the image so no clamping kink is crossed
    ys, xs = np.mgrid[0:7, 0:8]
    flow[..., 0] = np.clip(xs + flow[..., 0], 0.3, 6.7) - xs
    flow[..., 1] = np.clip(ys + flow[..., 1], 0.3, 5.7) - ys
    g = rng.standard_normal(img.shape)
    _, gflow = bilinear_warp_backward(img, flow, g)
    num = numeric_grad(lambda: np.sum(bilinear_warp(img, flow) * g), flow, eps=1e-6)
    assert rel_error(gflow, num) < 1e-4


def test_clamped_samples_have_no_flow_gradient(rng):
    img = rng.random((5, 5, 1))
    flow = np.full((5, 5, 2), 10.5)
    _, gflow = bilinear_warp_backward(img, flow, np.ones((5, 5, 1)))
    assert np.all(gflow == 0)


def test_warp_tensor_matches_array_warp(rng):
    src = rng.random((2, 3, 5, 6))
    flow = rng.uniform(-2, 2, (2, 2, 5, 6))
    out = warp_tensor(Tensor(src), Tensor(flow)).data
    for n in range(2):
        ref = bilinear_warp(np.moveaxis(src[n], 0, -1), np.moveaxis(flow[n], 0, -1))
        np.testing.assert_allclose(np.moveaxis(out[n], 0, -1), ref, atol=1e-12)
    with pytest.raises(ShapeError):
        warp_tensor(Tensor(src), Tensor(flow[:, :, :4]))


def test_shift_input_convention(rng):
    img = rng.random((16, 16, 3))
    np.testing.assert_array_equal(shift_input(img, (0, 0), 1.0), img)
    out = shift_input(img, (2, -1), 1.0)
    # out(x, y) = img(x - 2, y + 1)
    np.testing.assert_array_equal(out[:-1, 2:], img[1:, :-2])
    half = shift_input(img, (1, 0), 0.5)
    np.testing.assert_allclose(half[:, 1:], 0.5 * (img[:, 1:] + img[:, :-1]))
    with pytest.raises(ValueError):
        shift_input(img, (4, 4), 2.0)
    with pytest.raises(ValueError):
        shift_input(img, (5, 0), 1.0)


@given(small, small)
def test_valid_mask_of_consistent_constant_flows(dx, dy):
    fw = np.broadcast_to(np.array([dx, dy]), (6, 6, 2))
    assert valid_mask(fw, -fw).all()


def test_valid_mask_tolerance():
    fw = np.zeros((4, 4, 2))
    bw = np.zeros((4, 4, 2))
    bw[..., 0] = 0.9
    assert valid_mask(fw, bw, tol=1.0).all()
    assert not valid_mask(fw, bw, tol=0.5).any()
    assert valid_mask(fw, bw).dtype == np.uint8


def _frame(views):
    return LightFieldFrame.from_views(views)


def test_temporal_error_static_is_zero(rng):
    views = rng.random((81, 8, 8, 3)).astype(np.float32)
    lf = _frame(views)
    assert temporal_error(lf, lf, np.zeros((8, 8, 2)), np.ones((8, 8))) == 0.0


def test_temporal_error_single_pixel_normalization(rng):
    views = rng.random((81, 6, 7, 1)).astype(np.float32)
    other = views.copy()
    other[3, 2, 2, 0] += 0.5
    # only one of the 80 non-center views differs at one pixel
    e = temporal_error(_frame(other), _frame(views), np.zeros((6, 7, 2)), np.ones((6, 7)))
    assert e == pytest.approx(0.5 / (80 * 42), rel=1e-5)
    center = views.copy()
    center[40] += 0.3
    assert temporal_error(_frame(center), _frame(views), np.zeros((6, 7, 2)), np.ones((6, 7))) == 0.0


def test_temporal_error_one_pixel_translation(rng):
    views = rng.random((81, 12, 12, 3)).astype(np.float32)
    moved = np.roll(views, 1, axis=2)  # frame t = frame t-1 shifted right by 1 px
    flow = np.zeros((12, 12, 2))
    flow[..., 0] = 1.0
    mask = np.zeros((12, 12))
    mask[1:-1, 1:-1] = 1
    assert temporal_error(_frame(moved), _frame(views), flow, mask) < 1e-3


def test_temporal_error_rejects_empty_mask(rng):
    lf = _frame(rng.random((81, 4, 4, 1)).astype(np.float32))
    with pytest.raises(ValueError):
        temporal_error(lf, lf, np.zeros((4, 4, 2)), np.zeros((4, 4)))
    with pytest.raises(ShapeError):
        temporal_error(lf, lf, np.zeros((4, 4, 2)), np.ones((3, 4)))
