"""Geometric operators: input shifting, bilinear warping, flow consistency.

Flow fields are (H, W, 2) arrays of per-pixel ``(dx, dy)`` sampling
displacements: warping ``src`` by ``flow`` gives ``out(p) = src(p + flow(p))``.
A flow "from t to t-1" therefore lives on the pixel grid of frame t-1 and
points into frame t, so that ``warp(frame_t, flow) ~ frame_{t-1}``.
"""

from __future__ import annotations

import numpy as np

from . import _sampling
from ._validation import ShapeError, check_flow, check_image, check_same_shape
from .core import ANGULAR_HALF, AngularCoord, LightFieldFrame
from .nn.tensor import Tensor, as_tensor

DEFAULT_TOL = 1.0


def shift_input(center: np.ndarray, coord: tuple[int, int], eta: float) -> np.ndarray:
    """Translate the center view toward view ``coord``: ``out(x) = center(x - eta * du)``.

    Borders are edge-clamped.
    """
    img = check_image(center, "center")
    u, v = AngularCoord.checked(*coord)
    h, w = img.shape[:2]
    if abs(eta * ANGULAR_HALF) >= min(h, w) / 2:
        raise ValueError(f"eta={eta} shifts the corner views by more than half the image")
    return _sampling.translate(img, eta * u, eta * v)


def _warp_arrays(src: np.ndarray, flow: np.ndarray):
    h, w = src.shape[:2]
    xs, ys = _sampling.pixel_grid(h, w, flow.dtype)
    out, cache = _sampling.sample(
        np.moveaxis(src, -1, 0)[None], (xs + flow[..., 0])[None], (ys + flow[..., 1])[None]
    )
    return np.moveaxis(out[0], 0, -1), cache


def bilinear_warp(src: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Bilinearly sample ``src`` (H, W, C) at ``p + flow(p)``, edge-clamped."""
    img = check_image(src, "src", channels=())
    f = check_flow(flow, img.shape[:2])
    return _warp_arrays(img, f)[0]


def bilinear_warp_backward(src: np.ndarray, flow: np.ndarray, upstream_grad: np.ndarray):
    """Gradients of ``sum(upstream_grad * bilinear_warp(src, flow))``.

    Returns ``(grad_src, grad_flow)`` shaped like ``src`` and ``flow``.
    Sample positions clamped at the border contribute no flow gradient.
    """
    img = check_image(src, "src", channels=())
    f = check_flow(flow, img.shape[:2])
    g = np.asarray(upstream_grad, dtype=img.dtype)
    if g.ndim == 2:
        g = g[..., None]
    check_same_shape(g, img, ("upstream_grad", "src"))
    _, cache = _warp_arrays(img, f)
    gsrc, gx, gy = _sampling.sample_backward(np.moveaxis(img, -1, 0)[None], cache, np.moveaxis(g, -1, 0)[None])
    return np.moveaxis(gsrc[0], 0, -1), np.stack([gx[0], gy[0]], axis=-1)


def warp_tensor(src, flow) -> Tensor:
    """Differentiable batched warp: ``src`` (N, C, H, W), ``flow`` (N, 2, H, W)."""
    src, flow = as_tensor(src), as_tensor(flow)
    n, c, h, w = src.shape
    if flow.shape != (n, 2, h, w):
        raise ShapeError(f"flow shape {flow.shape} does not match src {src.shape}")
    xs, ys = _sampling.pixel_grid(h, w, flow.dtype)
    out, cache = _sampling.sample(src.data, xs + flow.data[:, 0], ys + flow.data[:, 1])
    src_data = src.data
    need_src = src.requires_grad

    def back(g):
        gsrc, gx, gy = _sampling.sample_backward(src_data, cache, g, need_src=need_src)
        return gsrc, np.stack([gx, gy], axis=1)

    return Tensor._make(out, (src, flow), back)


def valid_mask(flow_fw: np.ndarray, flow_bw: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Forward-backward consistency mask.

    A pixel ``p`` is valid (1) when following ``flow_fw`` and then the
    bilinearly sampled ``flow_bw`` returns within ``tol`` pixels of ``p``.
    """
    fw = check_flow(flow_fw, name="flow_fw")
    bw = check_flow(flow_bw, fw.shape[:2], name="flow_bw")
    back = _warp_arrays(bw, fw)[0]
    err = np.sqrt(np.sum((fw + back) ** 2, axis=-1))
    return (err <= tol).astype(np.uint8)


def temporal_error(
    lf_t: LightFieldFrame,
    lf_prev: LightFieldFrame,
    flow_t_to_prev: np.ndarray,
    mask: np.ndarray,
) -> float:
    """Flow-based warping error between consecutive light-field frames.

    Every non-center view of ``lf_t`` is warped onto frame t-1 with the
    shared ``flow_t_to_prev``; the masked L1 difference to the matching view
    of ``lf_prev`` is divided by the number of valid pixels and averaged over
    the 80 non-center views.
    """
    if lf_t.sais.shape != lf_prev.sais.shape:
        raise ShapeError("light-field frames differ in shape")
    h, w = lf_t.height, lf_t.width
    f = check_flow(flow_t_to_prev, (h, w))
    m = np.asarray(mask)
    if m.shape != (h, w):
        raise ShapeError(f"mask shape {m.shape} does not match ({h}, {w})")
    n_valid = float(np.count_nonzero(m))
    if n_valid == 0:
        raise ValueError("temporal error undefined for an empty valid mask")
    views_t = lf_t.views()
    views_prev = lf_prev.views()
    n_views = views_t.shape[0]
    center = n_views // 2
    idx = [i for i in range(n_views) if i != center]
    src = np.moveaxis(views_t[idx], -1, 1)
    xs, ys = _sampling.pixel_grid(h, w, f.dtype)
    xq = np.broadcast_to(xs + f[..., 0], (len(idx), h, w))
    yq = np.broadcast_to(ys + f[..., 1], (len(idx), h, w))
    warped, _ = _sampling.sample(src, xq, yq)
    diff = np.abs(np.moveaxis(warped, 1, -1).astype(np.float64) - views_prev[idx])
    per_view = (diff * (m[None, ..., None] != 0)).sum(axis=(1, 2, 3)) / n_valid
    return float(per_view.mean())
