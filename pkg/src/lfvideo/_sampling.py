"""Bilinear sampling with edge clamping, shared by the warp and core modules."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class _SampleCache(NamedTuple):
    src_shape: tuple
    n_idx: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    in_x: np.ndarray
    in_y: np.ndarray


def _axis(coord: np.ndarray, size: int):
    inside = (coord >= 0) & (coord <= size - 1)
    c = np.clip(coord, 0, size - 1)
    lo = np.floor(c).astype(np.intp)
    lo = np.minimum(lo, max(size - 2, 0))
    hi = np.minimum(lo + 1, size - 1)
    w = (c - lo).astype(coord.dtype)
    return lo, hi, w, inside


def sample(src: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, _SampleCache]:
    """Sample ``src`` (N, C, H, W) at absolute positions ``x``, ``y`` (N, Ho, Wo).

    Positions outside the image are clamped to the border, so the result is
    the nearest edge value there and carries no gradient w.r.t. position.
    """
    n, c, h, w = src.shape
    x0, x1, wx, in_x = _axis(x, w)
    y0, y1, wy, in_y = _axis(y, h)
    n_idx = np.arange(n).reshape((n,) + (1,) * (x.ndim - 1))
    # gathered arrays are (N, Ho, Wo, C)
    v00 = src[n_idx, :, y0, x0]
    v01 = src[n_idx, :, y0, x1]
    v10 = src[n_idx, :, y1, x0]
    v11 = src[n_idx, :, y1, x1]
    wxe, wye = wx[..., None], wy[..., None]
    top = v00 * (1 - wxe) + v01 * wxe
    bot = v10 * (1 - wxe) + v11 * wxe
    out = top * (1 - wye) + bot * wye
    cache = _SampleCache(src.shape, n_idx, x0, x1, y0, y1, wx, wy, in_x, in_y)
    return np.moveaxis(out, -1, 1).astype(src.dtype, copy=False), cache


def sample_backward(src: np.ndarray, cache: _SampleCache, g: np.ndarray, need_src: bool = True):
    """Gradients of :func:`sample` w.r.t. ``src``, ``x`` and ``y``.

    ``g`` has the output layout (N, C, Ho, Wo).
    """
    n_idx, x0, x1, y0, y1, wx, wy, in_x, in_y = cache[1:]
    gl = np.moveaxis(g, 1, -1)  # (N, Ho, Wo, C)
    v00 = src[n_idx, :, y0, x0]
    v01 = src[n_idx, :, y0, x1]
    v10 = src[n_idx, :, y1, x0]
    v11 = src[n_idx, :, y1, x1]
    wxe, wye = wx[..., None], wy[..., None]
    dx = ((v01 - v00) * (1 - wye) + (v11 - v10) * wye * 1.0)
    dy = ((v10 - v00) * (1 - wxe) + (v11 - v01) * wxe)
    gx = (gl * dx).sum(axis=-1) * in_x
    gy = (gl * dy).sum(axis=-1) * in_y
    gsrc = None
    if need_src:
        gsrc_l = np.zeros((cache.src_shape[0], cache.src_shape[2], cache.src_shape[3], cache.src_shape[1]), dtype=g.dtype)
        for yy, xx, wgt in (
            (y0, x0, (1 - wxe) * (1 - wye)),
            (y0, x1, wxe * (1 - wye)),
            (y1, x0, (1 - wxe) * wye),
            (y1, x1, wxe * wye),
        ):
            np.add.at(gsrc_l, (np.broadcast_to(n_idx, yy.shape), yy, xx), gl * wgt)
        gsrc = np.moveaxis(gsrc_l, -1, 1)
    return gsrc, gx.astype(g.dtype, copy=False), gy.astype(g.dtype, copy=False)


def pixel_grid(h: int, w: int, dtype=np.float32) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.meshgrid(np.arange(h, dtype=dtype), np.arange(w, dtype=dtype), indexing="ij")
    return xs, ys


def translate(img: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Return ``out(x, y) = img(x - dx, y - dy)`` for an (H, W, C) image, edge-clamped."""
    h, w = img.shape[:2]
    if float(dx).is_integer() and float(dy).is_integer():
        ys = np.clip(np.arange(h) - int(dy), 0, h - 1)
        xs = np.clip(np.arange(w) - int(dx), 0, w - 1)
        return img[ys][:, xs]
    xs, ys = pixel_grid(h, w, np.float64)
    src = np.moveaxis(img, -1, 0)[None]
    out, _ = sample(src, (xs - dx)[None], (ys - dy)[None])
    return np.moveaxis(out[0], 0, -1).astype(img.dtype, copy=False)
