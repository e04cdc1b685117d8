"""Two-phase training loop.

Phase 1 (``iteration < warmup_iters``) trains the encoders, the appearance
flow decoder and the optical flow decoder on the light-field mean/variance
losses and the unsupervised flow loss while the occlusion network stays
frozen. Phase 2 trains everything on the full weighted loss; from then on
the temporal terms use synthesized frames.

The ``total`` log column is the loss being optimized, so its composition
changes at the phase boundary. ``objective`` is always the full phase-2
loss: in phase 1 it is evaluated without gradient every ``monitor_every``
iterations (``nan`` otherwise), which makes the two phases comparable.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..core import LightFieldVideo
from ..nn import Adam, Tensor, load_checkpoint, no_grad, save_checkpoint
from .config import NetworkConfig
from .losses import lf_terms, loss_flow, loss_occ, loss_percep, loss_temp
from .network import LightFieldNet, luminance_nchw
from .pipeline import forward_pair

log = logging.getLogger(__name__)

LOG_FIELDS = ("iteration", "phase", "global", "local", "flow", "occ", "percep", "temp", "total", "objective")


@dataclass
class TrainResult:
    net: LightFieldNet
    cfg: NetworkConfig
    log: list[dict] = field(default_factory=list)
    dropped: Counter = field(default_factory=Counter)


class _Clips:
    """Channel-first copies of the training videos for fast cropping."""

    def __init__(self, dataset: Sequence[LightFieldVideo]):
        self.views = []
        for vid in dataset:
            arr = np.stack([f.views() for f in vid.frames]).astype(np.float32)  # (T, 81, H, W, C)
            self.views.append(np.ascontiguousarray(np.moveaxis(arr, -1, 2)))  # (T, 81, C, H, W)
        shapes = {v.shape[1:] for v in self.views}
        if len(shapes) != 1:
            raise ValueError("all training videos must share one light-field shape")
        _, self.channels, self.height, self.width = next(iter(shapes))

    def sample(self, rng: np.random.Generator, crop: int):
        vid = self.views[int(rng.integers(len(self.views)))]
        n_frames = vid.shape[0]
        t = int(rng.integers(1, n_frames)) if n_frames > 1 else 0
        ch = min(crop, self.height)
        cw = min(crop, self.width)
        y0 = int(rng.integers(0, self.height - ch + 1))
        x0 = int(rng.integers(0, self.width - cw + 1))
        window = vid[:, :, :, y0 : y0 + ch, x0 : x0 + cw]
        return window, t


def _center(lf: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(lf[lf.shape[0] // 2])


def _full_terms(net: LightFieldNet, cfg: NetworkConfig, window: np.ndarray, t: int, dropped: Counter) -> dict:
    """Unweighted phase-2 loss terms for frame ``t`` of a cropped clip."""
    gt_t = window[t]
    frame_t = _center(gt_t)
    frame_prev = _center(window[t - 1]) if t > 0 else frame_t
    out = forward_pair(net, frame_t, frame_prev, refine=True)
    g, loc = lf_terms(out.lf_initial, gt_t)
    terms = {
        "global": g,
        "local": loc,
        "occ": loss_occ(out.lf_final, gt_t),
        "percep": loss_percep(out.lf_final, gt_t, net.perceptual),
    }
    if cfg.w_temp > 0 and t > 0:
        frame_pp = _center(window[t - 2]) if t > 1 else frame_prev
        out_prev = forward_pair(net, frame_prev, frame_pp, refine=True)
        # flows between synthesized frames, estimated on their mean images
        mean_t = out.lf_initial.data.mean(axis=0)
        mean_prev = out_prev.lf_initial.data.mean(axis=0)
        feats = net.feature_extract(luminance_nchw(mean_t), luminance_nchw(mean_prev))
        fw, bw = net.optical_flow_decode(feats)
        terms["flow"] = loss_flow(
            luminance_nchw(mean_t), luminance_nchw(mean_prev), fw, bw, cfg.smooth_weight, cfg.valid_tol, dropped
        )
        terms["temp"] = loss_temp(out.lf_final, out_prev.lf_final, fw.data, bw.data, cfg.valid_tol, dropped)
    else:
        terms["flow"] = loss_flow(
            luminance_nchw(frame_t), luminance_nchw(frame_prev), out.flow_fw, out.flow_bw,
            cfg.smooth_weight, cfg.valid_tol, dropped,
        )
    return terms


def _weighted(terms: dict, cfg: NetworkConfig) -> Tensor:
    total = terms["global"] * cfg.w_global + terms["local"] * cfg.w_local
    total = total + terms["occ"] * cfg.w_occ + terms["percep"] * cfg.w_percep + terms["flow"] * cfg.w_flow
    if "temp" in terms:
        total = total + terms["temp"] * cfg.w_temp
    return total


def train(
    dataset: Sequence[LightFieldVideo],
    cfg: NetworkConfig,
    net: LightFieldNet | None = None,
    callback: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Train a :class:`LightFieldNet` on videos with ground-truth light fields."""
    if not dataset:
        raise ValueError("empty dataset")
    clips = _Clips(dataset)
    mult = cfg.size_multiple
    crop = (min(cfg.crop, clips.height, clips.width) // mult) * mult
    if crop < mult:
        raise ValueError(f"training frames smaller than the network stride {mult}")
    if net is None:
        net = LightFieldNet(cfg, channels=clips.channels)
    rng = np.random.default_rng(cfg.seed)
    groups = net.groups()
    betas = (cfg.beta1, cfg.beta2)
    opt_main = Adam(groups["features"] + groups["appearance"] + groups["optical"], lr=cfg.lr, betas=betas)
    opt_occ: Adam | None = None
    result = TrainResult(net, cfg)

    for it in range(cfg.total_iters):
        phase = 1 if it < cfg.warmup_iters else 2
        if phase == 2 and opt_occ is None:
            opt_occ = Adam(groups["occlusion"], lr=cfg.lr, betas=betas)
        window, t = clips.sample(rng, crop)
        gt_t = window[t]
        frame_t = _center(gt_t)
        frame_prev = _center(window[t - 1]) if t > 0 else frame_t

        row = {k: 0.0 for k in LOG_FIELDS}
        row.update(iteration=it, phase=phase, objective=float("nan"))
        if phase == 1:
            out = forward_pair(net, frame_t, frame_prev, refine=False)
            g, loc = lf_terms(out.lf_initial, gt_t)
            fl = loss_flow(
                luminance_nchw(frame_t), luminance_nchw(frame_prev), out.flow_fw, out.flow_bw,
                cfg.smooth_weight, cfg.valid_tol, result.dropped,
            )
            total = g * cfg.w_global + loc * cfg.w_local + fl * cfg.w_flow
            row.update({"global": g.item(), "local": loc.item(), "flow": fl.item()})
            if cfg.monitor_every and it % cfg.monitor_every == 0:
                # the phase-2 objective, evaluated but not optimized
                with no_grad():
                    terms = _full_terms(net, cfg, window, t, Counter())
                row["objective"] = _weighted(terms, cfg).item()
        else:
            terms = _full_terms(net, cfg, window, t, result.dropped)
            total = _weighted(terms, cfg)
            row.update({k: v.item() for k, v in terms.items()})
            row["objective"] = total.item()

        opt_main.zero_grad()
        if opt_occ is not None:
            opt_occ.zero_grad()
        total.backward()
        opt_main.step()
        if phase == 2:
            opt_occ.step()
        row["total"] = total.item()
        result.log.append(row)
        if callback is not None:
            callback(row)
        if it % 100 == 0:
            log.info("iter %d phase %d total %.5f", it, phase, row["total"])
    return result


def write_loss_log(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in LOG_FIELDS})


def read_loss_log(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {k: (int(v) if k in ("iteration", "phase") else float(v)) for k, v in row.items()} for row in rows
    ]


def save_model(path, net: LightFieldNet, extra: dict | None = None) -> Path:
    meta = {"config": net.cfg.to_dict(), "channels": net.channels}
    meta.update(extra or {})
    return save_checkpoint(path, net.state_dict(), extra=meta)


def load_model(path) -> LightFieldNet:
    arrays, extra = load_checkpoint(path)
    cfg = NetworkConfig.from_dict(extra["config"])
    net = LightFieldNet(cfg, channels=int(extra.get("channels", 3)))
    net.load_state_dict(arrays)
    return net


def evaluate_loss(net: LightFieldNet, frame_t: np.ndarray, frame_prev: np.ndarray, gt: np.ndarray) -> float:
    """Phase-2 reconstruction loss on one channel-first sample, without gradients."""
    cfg = net.cfg
    with no_grad():
        out = forward_pair(net, frame_t, frame_prev, refine=True)
        g, loc = lf_terms(out.lf_initial, gt)
        occ = loss_occ(out.lf_final, gt)
    return float(g.item() * cfg.w_global + loc.item() * cfg.w_local + occ.item() * cfg.w_occ)


__all__ = [
    "LOG_FIELDS",
    "TrainResult",
    "evaluate_loss",
    "load_model",
    "read_loss_log",
    "save_model",
    "train",
    "write_loss_log",
]
