"""Brute-force reference implementations used as test oracles.

Everything here is written with explicit loops or direct formulas and shares
no code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def loop_mean(views):
    """views: (N, H, W, C)."""
    n, h, w, c = views.shape
    out = np.zeros((h, w, c))
    for y in range(h):
        for x in range(w):
            for k in range(c):
                out[y, x, k] = sum(float(views[i, y, x, k]) for i in range(n)) / n
    return out


def loop_variance(views):
    n, h, w, c = views.shape
    mu = loop_mean(views)
    out = np.zeros((h, w, c))
    for y in range(h):
        for x in range(w):
            for k in range(c):
                out[y, x, k] = sum((float(views[i, y, x, k]) - mu[y, x, k]) ** 2 for i in range(n)) / n
    return out


def loop_psnr(a, b, peak=1.0):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    se = 0.0
    for x, y in zip(a, b):
        se += (x - y) ** 2
    mse = se / len(a)
    return math.inf if mse == 0 else 10 * math.log10(peak * peak / mse)


def loop_ssim(a, b, peak=1.0, size=11, sigma=1.5):
    """Window-by-window SSIM with an explicitly built 2-D Gaussian."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    r = size // 2
    g = np.array([[math.exp(-((i - r) ** 2 + (j - r) ** 2) / (2 * sigma**2)) for j in range(size)] for i in range(size)])
    g /= g.sum()
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    h, w = a.shape
    vals = []
    for y in range(h - size + 1):
        for x in range(w - size + 1):
            pa = a[y : y + size, x : x + size]
            pb = b[y : y + size, x : x + size]
            ma = (g * pa).sum()
            mb = (g * pb).sum()
            va = (g * (pa - ma) ** 2).sum()
            vb = (g * (pb - mb) ** 2).sum()
            cov = (g * (pa - ma) * (pb - mb)).sum()
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def loop_conv2d(x, w, b, stride, pad):
    n, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, o, ho, wo))
    for i in range(n):
        for oc in range(o):
            for y in range(ho):
                for xx in range(wo):
                    acc = 0.0 if b is None else float(b[oc])
                    for ic in range(c):
                        for ky in range(kh):
                            for kx in range(kw):
                                sy = y * stride + ky - pad
                                sx = xx * stride + kx - pad
                                if 0 <= sy < h and 0 <= sx < wd:
                                    acc += x[i, ic, sy, sx] * w[oc, ic, ky, kx]
                    out[i, oc, y, xx] = acc
    return out


def loop_conv3d(x, w, b, stride, pad):
    n, c, d, h, wd = x.shape
    o, _, kd, kh, kw = w.shape
    sd, sh, sw = stride
    pd, ph, pw = pad
    do = (d + 2 * pd - kd) // sd + 1
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (wd + 2 * pw - kw) // sw + 1
    out = np.zeros((n, o, do, ho, wo))
    for i in range(n):
        for oc in range(o):
            for z in range(do):
                for y in range(ho):
                    for xx in range(wo):
                        acc = 0.0 if b is None else float(b[oc])
                        for kz in range(kd):
                            for ky in range(kh):
                                for kx in range(kw):
                                    sz, sy, sx = z * sd + kz - pd, y * sh + ky - ph, xx * sw + kx - pw
                                    if 0 <= sz < d and 0 <= sy < h and 0 <= sx < wd:
                                        acc += float(np.dot(x[i, :, sz, sy, sx], w[oc, :, kz, ky, kx]))
                        out[i, oc, z, y, xx] = acc
    return out


def loop_correlation(a, b, d):
    n, c, h, w = a.shape
    side = 2 * d + 1
    out = np.zeros((n, side * side, h, w))
    for i in range(n):
        for dy in range(-d, d + 1):
            for dx in range(-d, d + 1):
                k = (dy + d) * side + (dx + d)
                for y in range(h):
                    for x in range(w):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w:
                            out[i, k, y, x] = float(np.dot(a[i, :, y, x], b[i, :, yy, xx])) / c
    return out


def loop_bilinear(img, px, py):
    """Sample an (H, W, C) image at one point, clamping to the border."""
    h, w = img.shape[:2]
    px = min(max(px, 0.0), w - 1.0)
    py = min(max(py, 0.0), h - 1.0)
    x0, y0 = int(math.floor(px)), int(math.floor(py))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = px - x0, py - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def loop_warp(img, flow):
    h, w = img.shape[:2]
    out = np.zeros(img.shape, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            out[y, x] = loop_bilinear(img.astype(np.float64), x + flow[y, x, 0], y + flow[y, x, 1])
    return out


def epi_slope(epi, lo=-5.0, hi=5.0, step=0.01, border=16):
    """Slope (px/view) that best aligns the rows of an EPI.

    For each candidate slope every row ``u`` is resampled at ``x + s * u``
    with ``np.interp`` and the variance across rows is summed over interior
    columns; the minimizing slope is returned.
    """
    epi = np.asarray(epi, dtype=np.float64)
    if epi.ndim == 3:
        epi = epi.mean(axis=-1)
    n_views, w = epi.shape
    us = np.arange(n_views) - n_views // 2
    xs = np.arange(border, w - border, dtype=np.float64)
    grid = np.arange(w, dtype=np.float64)
    best, best_cost = None, math.inf
    for s in np.arange(lo, hi + step / 2, step):
        rows = np.stack([np.interp(xs + s * u, grid, epi[i]) for i, u in enumerate(us)])
        cost = rows.var(axis=0).sum()
        if cost < best_cost:
            best, best_cost = float(s), cost
    return best


def laplacian_variance(img):
    """Variance of the 4-neighbour Laplacian over interior pixels (sharpness)."""
    g = np.asarray(img, dtype=np.float64)
    if g.ndim == 3:
        g = g.mean(axis=-1)
    lap = g[1:-1, :-2] + g[1:-1, 2:] + g[:-2, 1:-1] + g[2:, 1:-1] - 4 * g[1:-1, 1:-1]
    return float(lap.var())


def numeric_grad(f, x, eps=1e-6):
    """Central finite differences of scalar ``f`` w.r.t. every entry of ``x`` (modified in place, restored)."""
    g = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
    return g


def rel_error(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    den = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / den)
