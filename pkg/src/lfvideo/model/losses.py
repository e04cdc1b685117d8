"""Training losses.

Light fields are (81, C, H, W) tensors or arrays; flows are (1, 2, H, W).
"""

from __future__ import annotations

import warnings
from collections import Counter

import numpy as np

from ..nn import Tensor, as_tensor, l1, masked_l1
from ..warp import valid_mask, warp_tensor
from .network import PerceptualNet

DROPPED = Counter()


def _mean_var(lf: Tensor) -> tuple[Tensor, Tensor]:
    mean = lf.mean(axis=0)
    dev = lf - mean
    return mean, (dev * dev).mean(axis=0)


def lf_terms(lf, lf_gt) -> tuple[Tensor, Tensor]:
    """``(global, local)``: L1 between mean images and between variance images."""
    lf = as_tensor(lf)
    gt = np.asarray(lf_gt.data if isinstance(lf_gt, Tensor) else lf_gt, dtype=lf.dtype)
    if lf.shape != gt.shape:
        raise ValueError(f"shape mismatch: {lf.shape} vs {gt.shape}")
    mean, var = _mean_var(lf)
    gt_mean = gt.mean(axis=0)
    gt_var = gt.var(axis=0)
    return l1(mean, gt_mean), l1(var, gt_var)


def loss_lf(lf, lf_gt, w_global: float = 1.0, w_local: float = 1.0) -> Tensor:
    g, loc = lf_terms(lf, lf_gt)
    return g * w_global + loc * w_local


def loss_occ(lf, lf_gt) -> Tensor:
    """Mean absolute error over all views, pixels and channels."""
    lf = as_tensor(lf)
    gt = np.asarray(lf_gt.data if isinstance(lf_gt, Tensor) else lf_gt)
    if lf.shape != gt.shape:
        raise ValueError(f"shape mismatch: {lf.shape} vs {gt.shape}")
    return l1(lf, gt.astype(lf.dtype))


def loss_percep(lf, lf_gt, net: PerceptualNet) -> Tensor:
    """L1 between frozen feature stacks of the two mean images."""
    lf = as_tensor(lf)
    gt = np.asarray(lf_gt.data if isinstance(lf_gt, Tensor) else lf_gt, dtype=lf.dtype)
    if lf.shape != gt.shape:
        raise ValueError(f"shape mismatch: {lf.shape} vs {gt.shape}")
    f = net(lf.mean(axis=0, keepdims=True))
    f_gt = net(Tensor(gt.mean(axis=0, keepdims=True))).data
    return l1(f, f_gt)


def _hw2(flow) -> np.ndarray:
    a = flow.data if isinstance(flow, Tensor) else np.asarray(flow)
    return np.moveaxis(a[0], 0, -1)


def _masked_term(src, target, flow_a, flow_b, tol: float, counter: Counter, key: str):
    # warp src by flow_a onto target's grid; mask from the (detached) flow pair
    mask = valid_mask(_hw2(flow_a), _hw2(flow_b), tol)
    if not mask.any():
        counter[key] += 1
        warnings.warn(f"{key}: empty valid mask, term dropped", RuntimeWarning, stacklevel=3)
        return None
    warped = warp_tensor(src, flow_a)
    return masked_l1(warped, target, mask[None, None])


def loss_temp(lf_t, lf_prev, flow_fw, flow_bw, tol: float = 1.0, counter: Counter | None = None) -> Tensor:
    """Symmetric masked L1 between flow-warped mean images.

    ``flow_fw`` lives on frame t-1's grid and samples frame t, ``flow_bw``
    the reverse; both are treated as constants. Terms whose valid mask is
    empty are dropped and counted in ``counter`` (module-level ``DROPPED`` by
    default).
    """
    counter = DROPPED if counter is None else counter
    lf_t, lf_prev = as_tensor(lf_t), as_tensor(lf_prev)
    fw = np.asarray(flow_fw.data if isinstance(flow_fw, Tensor) else flow_fw, dtype=lf_t.dtype)
    bw = np.asarray(flow_bw.data if isinstance(flow_bw, Tensor) else flow_bw, dtype=lf_t.dtype)
    m_t = lf_t.mean(axis=0, keepdims=True)
    m_prev = lf_prev.mean(axis=0, keepdims=True)
    terms = [
        _masked_term(m_t, m_prev, fw, bw, tol, counter, "temp_fw"),
        _masked_term(m_prev, m_t, bw, fw, tol, counter, "temp_bw"),
    ]
    terms = [t for t in terms if t is not None]
    if not terms:
        return Tensor(np.zeros((), dtype=lf_t.dtype))
    return terms[0] if len(terms) == 1 else terms[0] + terms[1]


def smoothness(flow: Tensor) -> Tensor:
    """Mean absolute first-order difference of a (N, 2, H, W) flow."""
    flow = as_tensor(flow)
    dx = flow[:, :, :, 1:] - flow[:, :, :, :-1]
    dy = flow[:, :, 1:, :] - flow[:, :, :-1, :]
    return dx.abs().mean() + dy.abs().mean()


def loss_flow(
    frame_t,
    frame_prev,
    flow_fw,
    flow_bw,
    smooth_weight: float = 0.1,
    tol: float = 1.0,
    counter: Counter | None = None,
) -> Tensor:
    """Unsupervised flow loss: masked photometric L1 plus first-order smoothness.

    Frames are (1, C, H, W); the photometric terms compare each frame with
    the other frame warped onto its grid, restricted to forward-backward
    consistent pixels.
    """
    counter = DROPPED if counter is None else counter
    ft = np.asarray(frame_t.data if isinstance(frame_t, Tensor) else frame_t)
    fp = np.asarray(frame_prev.data if isinstance(frame_prev, Tensor) else frame_prev)
    fw, bw = as_tensor(flow_fw), as_tensor(flow_bw)
    terms = [
        _masked_term(Tensor(ft), fp, fw, bw, tol, counter, "flow_fw"),
        _masked_term(Tensor(fp), ft, bw, fw, tol, counter, "flow_bw"),
    ]
    total = smoothness(fw) * smooth_weight + smoothness(bw) * smooth_weight
    for t in terms:
        if t is not None:
            total = total + t
    return total
