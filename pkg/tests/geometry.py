"""Shared geometry-oracle helpers for scenegen-based checks."""

from __future__ import annotations

import math

import numpy as np

from lfvideo.core import angular_grid, psnr
from lfvideo.model import LightFieldNet, NetworkConfig
from lfvideo.nn import Tensor, no_grad
from lfvideo.scenegen import gt_appearance_flow


def interior_margin(disparity: float, eta: float) -> int:
    return int(math.ceil(4 * max(abs(disparity), abs(eta - disparity), abs(eta)))) + 2


def synth_with_gt_flow(spec, video, eta: float = 1.0, t: int = 0) -> np.ndarray:
    """Initial light field (81, H, W, C) synthesized from the center view with ground-truth flows."""
    net = LightFieldNet(NetworkConfig(eta=eta), channels=3)
    center = np.moveaxis(video.frames[t].center, -1, 0).astype(np.float64)
    flows = np.stack([np.moveaxis(gt_appearance_flow(spec, (c.u, c.v), eta, t), -1, 0) for c in angular_grid()])
    with no_grad():
        lf = net.synth_initial(center, Tensor(flows.astype(np.float64))).data
    return np.moveaxis(lf, 1, -1)


def interior_psnr(a: np.ndarray, b: np.ndarray, margin: int) -> float:
    sl = (Ellipsis, slice(margin, -margin), slice(margin, -margin), slice(None))
    return psnr(a[sl], b[sl])
