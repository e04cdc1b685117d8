"""End-to-end synthesis of light-field frames from a monocular pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._validation import check_image, check_same_shape
from ..core import ANGULAR_RES, LightFieldFrame, LightFieldVideo
from ..nn import Tensor, no_grad
from .network import LightFieldNet, luminance_nchw


@dataclass
class SynthesisOutput:
    """All intermediates of one synthesized frame (images are (H, W, C))."""

    lf_initial: LightFieldFrame
    lf_final: LightFieldFrame
    appearance_flows: np.ndarray  # (9, 9, H, W, 2)
    residual: np.ndarray  # (9, 9, H, W, C)
    variance_mask: np.ndarray  # (9, 9, H, W)
    flow_fw: np.ndarray  # (H, W, 2), t -> t-1
    flow_bw: np.ndarray  # (H, W, 2), t-1 -> t


@dataclass
class ForwardPass:
    """Tensor-level results used by training (channel-first)."""

    lf_initial: Tensor
    lf_final: Tensor | None
    residual: Tensor | None
    flows: Tensor
    mask: np.ndarray | None
    flow_fw: Tensor
    flow_bw: Tensor


def forward_pair(net: LightFieldNet, frame_t: np.ndarray, frame_prev: np.ndarray, refine: bool = True) -> ForwardPass:
    """Run every stage on channel-first frames (C, H, W)."""
    feats = net.feature_extract(luminance_nchw(frame_t), luminance_nchw(frame_prev))
    flows = net.appearance_flow_decode(feats)
    lf_init = net.synth_initial(frame_t, flows)
    fw, bw = net.optical_flow_decode(feats)
    lf_final = residual = mask = None
    if refine:
        mask = net.occlusion_mask(lf_init)
        lf_final, residual = net.occlusion_refine(lf_init, mask, frame_t)
    return ForwardPass(lf_init, lf_final, residual, flows, mask, fw, bw)


def _pad_to(img: np.ndarray, multiple: int) -> np.ndarray:
    h, w = img.shape[1:]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return img
    return np.pad(img, ((0, 0), (0, ph), (0, pw)), mode="edge")


def _grid(a: np.ndarray, h: int, w: int) -> np.ndarray:
    # (81, K, Hp, Wp) -> (9, 9, h, w, K)
    a = np.moveaxis(a[:, :, :h, :w], 1, -1)
    return a.reshape((ANGULAR_RES, ANGULAR_RES) + a.shape[1:])


def synthesize_frame(net: LightFieldNet, frame_t: np.ndarray, frame_prev: np.ndarray, timestamp: int = 0) -> SynthesisOutput:
    """Synthesize the light field of ``frame_t`` given the previous frame.

    Frames are (H, W, C) with C matching the network. Inputs whose size is
    not a multiple of the network stride are edge-padded and the outputs
    cropped back.
    """
    ft = check_image(frame_t, "frame_t")
    fp = check_image(frame_prev, "frame_prev")
    check_same_shape(ft, fp, ("frame_t", "frame_prev"))
    if ft.shape[-1] != net.channels:
        raise ValueError(f"network expects {net.channels} channels, got {ft.shape[-1]}")
    h, w = ft.shape[:2]
    mult = net.cfg.size_multiple
    a = _pad_to(np.ascontiguousarray(np.moveaxis(ft, -1, 0), dtype=np.float32), mult)
    b = _pad_to(np.ascontiguousarray(np.moveaxis(fp, -1, 0), dtype=np.float32), mult)
    with no_grad():
        out = forward_pair(net, a, b, refine=True)
    lf_init = _grid(out.lf_initial.data, h, w)
    lf_final = _grid(out.lf_final.data, h, w)
    # the padded border never reaches the center view; re-pin the exact input
    lf_init[ANGULAR_RES // 2, ANGULAR_RES // 2] = ft
    lf_final[ANGULAR_RES // 2, ANGULAR_RES // 2] = ft
    return SynthesisOutput(
        lf_initial=LightFieldFrame(lf_init, timestamp),
        lf_final=LightFieldFrame(lf_final, timestamp),
        appearance_flows=_grid(out.flows.data, h, w),
        residual=_grid(out.residual.data, h, w),
        variance_mask=_grid(out.mask, h, w)[..., 0],
        flow_fw=np.moveaxis(out.flow_fw.data[0, :, :h, :w], 0, -1).copy(),
        flow_bw=np.moveaxis(out.flow_bw.data[0, :, :h, :w], 0, -1).copy(),
    )


def synthesize_video(net: LightFieldNet, frames: np.ndarray) -> LightFieldVideo:
    """Synthesize one light-field frame per input frame.

    The first frame is paired with itself, so the output length equals the
    input length.
    """
    frames = np.asarray(frames)
    if frames.ndim != 4:
        raise ValueError(f"frames must be (T, H, W, C), got {frames.shape}")
    out = []
    flows_fw, flows_bw = [], []
    for t in range(len(frames)):
        prev = frames[t - 1] if t > 0 else frames[t]
        res = synthesize_frame(net, frames[t], prev, timestamp=t)
        out.append(res.lf_final)
        flows_fw.append(res.flow_fw)
        flows_bw.append(res.flow_bw)
    return LightFieldVideo(out, {"est_flow_fw": np.stack(flows_fw), "est_flow_bw": np.stack(flows_bw)})


def replicate_center(frames: np.ndarray) -> LightFieldVideo:
    """Baseline: every view is a copy of the input frame."""
    frames = np.asarray(frames, dtype=np.float32)
    out = []
    for t, f in enumerate(frames):
        sais = np.broadcast_to(f, (ANGULAR_RES, ANGULAR_RES) + f.shape)
        out.append(LightFieldFrame(sais, t))
    return LightFieldVideo(out)


__all__ = [
    "ForwardPass",
    "SynthesisOutput",
    "forward_pair",
    "replicate_center",
    "synthesize_frame",
    "synthesize_video",
]
