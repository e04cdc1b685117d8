"""Convolution and correlation operators on :class:`Tensor`.

Convolutions are cross-correlations (no kernel flip), computed by unfolding
the padded input into a patch matrix and doing one matrix product.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import Tensor, as_tensor


def _tuple(v, n: int) -> tuple:
    if np.isscalar(v):
        return (int(v),) * n
    v = tuple(int(i) for i in v)
    if len(v) != n:
        raise ValueError(f"expected {n} values, got {v}")
    return v


def _convnd(x: Tensor, weight: Tensor, bias: Tensor | None, stride, padding) -> Tensor:
    nsp = weight.ndim - 2
    if x.ndim != nsp + 2:
        raise ValueError(f"input must be {nsp + 2}-D, got shape {x.shape}")
    n, c = x.shape[:2]
    o, c_w = weight.shape[:2]
    if c != c_w:
        raise ValueError(f"channel mismatch: input has {c}, kernel expects {c_w}")
    ksize = weight.shape[2:]
    stride = _tuple(stride, nsp)
    padding = _tuple(padding, nsp)

    pad_width = [(0, 0), (0, 0)] + [(p, p) for p in padding]
    xp = np.pad(x.data, pad_width) if any(padding) else x.data
    out_sp = tuple((xp.shape[2 + i] - ksize[i]) // stride[i] + 1 for i in range(nsp))
    if min(out_sp) <= 0:
        raise ValueError(f"input {x.shape} too small for kernel {ksize}")
    offsets = list(np.ndindex(*ksize))
    slices = [
        tuple(slice(k, k + s * (m - 1) + 1, s) for k, s, m in zip(offs, stride, out_sp)) for offs in offsets
    ]
    n_pos = int(np.prod(out_sp))
    # patches laid out (N, K, C, positions): one contiguous copy per kernel offset
    cols = np.empty((n, len(offsets), c) + out_sp, dtype=xp.dtype)
    for k, sl in enumerate(slices):
        cols[:, k] = xp[(slice(None), slice(None)) + sl]
    cols = cols.reshape(n, len(offsets) * c, n_pos)
    # kernel reordered to (O, K, C) to match the patch layout
    wmat = np.ascontiguousarray(np.moveaxis(weight.data, 1, -1)).reshape(o, -1)
    out = np.matmul(wmat, cols)
    if bias is not None:
        out += bias.data[:, None]
    out = out.reshape((n, o) + out_sp)

    x_shape, xp_shape, dtype = x.shape, xp.shape, x.dtype
    need_x = x.requires_grad
    w_shape = weight.shape

    def back(g):
        gm = g.reshape(n, o, n_pos)
        gw = np.matmul(gm, cols.transpose(0, 2, 1)).sum(axis=0)
        gw = np.moveaxis(gw.reshape((o,) + tuple(ksize) + (c,)), -1, 1)
        gb = gm.sum(axis=(0, 2)) if bias is not None else None
        gx = None
        if need_x:
            gcols = np.matmul(wmat.T, gm).reshape((n, len(offsets), c) + out_sp)
            gxp = np.zeros(xp_shape, dtype=dtype)
            for k, sl in enumerate(slices):
                gxp[(slice(None), slice(None)) + sl] += gcols[:, k]
            crop = tuple(slice(p, p + m) for p, m in zip(padding, x_shape[2:]))
            gx = gxp[(slice(None), slice(None)) + crop]
        assert gw.shape == w_shape
        return (gx, gw, gb) if bias is not None else (gx, gw)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor._make(out, parents, back)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride=1, padding=0) -> Tensor:
    """2-D cross-correlation of ``x`` (N, C, H, W) with ``weight`` (O, C, kH, kW)."""
    if weight.ndim != 4:
        raise ValueError(f"conv2d kernel must be 4-D, got {weight.shape}")
    return _convnd(as_tensor(x), weight, bias, stride, padding)


def conv3d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride=1, padding=0) -> Tensor:
    """3-D cross-correlation of ``x`` (N, C, D, H, W) with ``weight`` (O, C, kD, kH, kW)."""
    if weight.ndim != 5:
        raise ValueError(f"conv3d kernel must be 5-D, got {weight.shape}")
    return _convnd(as_tensor(x), weight, bias, stride, padding)


def correlation(a: Tensor, b: Tensor, max_disp: int = 4) -> Tensor:
    """Dense correlation volume between two feature maps.

    ``out[n, k, y, x] = mean_c a[n, c, y, x] * b[n, c, y + dy, x + dx]`` where
    ``k = (dy + d) * (2d + 1) + (dx + d)`` enumerates displacements in
    ``[-d, d]^2``. Samples of ``b`` outside the map count as zero.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 4:
        raise ValueError(f"correlation expects (N, C, H, W), got {a.shape}")
    d = int(max_disp)
    if d < 0:
        raise ValueError("max_disp must be >= 0")
    n, c, h, w = a.shape
    side = 2 * d + 1
    bp = np.pad(b.data, ((0, 0), (0, 0), (d, d), (d, d)))
    out = np.empty((n, side * side, h, w), dtype=np.result_type(a.dtype, b.dtype))
    inv_c = 1.0 / c
    for k, (dy, dx) in enumerate(np.ndindex(side, side)):
        out[:, k] = np.einsum("nchw,nchw->nhw", a.data, bp[:, :, dy : dy + h, dx : dx + w]) * inv_c

    a_data = a.data

    def back(g):
        ga = np.zeros_like(a_data)
        gbp = np.zeros_like(bp)
        for k, (dy, dx) in enumerate(np.ndindex(side, side)):
            gk = g[:, k : k + 1] * inv_c
            ga += gk * bp[:, :, dy : dy + h, dx : dx + w]
            gbp[:, :, dy : dy + h, dx : dx + w] += gk * a_data
        return ga, gbp[:, :, d : d + h, d : d + w]

    return Tensor._make(out, (a, b), back)


def l1(a: Tensor, b) -> Tensor:
    """Mean absolute difference."""
    return (a - b).abs().mean()


def masked_l1(a: Tensor, b, mask: np.ndarray) -> Tensor:
    """Mean absolute difference over positions where ``mask`` is 1.

    ``mask`` broadcasts against ``a``; the mean divides by the number of
    selected elements after broadcasting.
    """
    mask = np.broadcast_to(np.asarray(mask, dtype=a.dtype), a.shape)
    count = float(mask.sum())
    if count == 0:
        raise ValueError("empty mask")
    return ((a - b).abs() * mask).sum() * (1.0 / count)


def pad_edge(x: Tensor, widths: Sequence[tuple[int, int]]) -> Tensor:
    """Replicate-pad ``x``; ``widths`` lists (before, after) for every axis."""
    widths = [tuple(w) for w in widths]
    shape = x.shape

    def back(g):
        # fold replicated borders back onto the edge elements
        for ax, (lo, hi) in enumerate(widths):
            if lo == 0 and hi == 0:
                continue
            n = shape[ax]
            core = np.take(g, range(lo, lo + n), axis=ax).copy()
            if lo:
                first = np.take(g, range(0, lo), axis=ax).sum(axis=ax, keepdims=True)
                idx = [slice(None)] * g.ndim
                idx[ax] = slice(0, 1)
                core[tuple(idx)] += first
            if hi:
                last = np.take(g, range(lo + n, lo + n + hi), axis=ax).sum(axis=ax, keepdims=True)
                idx = [slice(None)] * g.ndim
                idx[ax] = slice(n - 1, n)
                core[tuple(idx)] += last
            g = core
        return (g,)

    return Tensor._make(np.pad(x.data, widths, mode="edge"), (x,), back)
