"""Quality and temporal-stability metrics for light-field videos.

Frame PSNR pools the squared error over all 81 views, so a synthesized
frame whose center view is pinned to the input still scores a finite value.
SSIM is the mean of per-view SSIM on luminance.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._validation import ShapeError
from .core import CENTER_INDEX, LightFieldFrame, LightFieldVideo, psnr, ssim, to_luminance
from .warp import DEFAULT_TOL, temporal_error, valid_mask

FRAME_FIELDS = ("frame", "psnr", "ssim", "psnr_noncenter", "e_temp")


def _luma(views: np.ndarray) -> np.ndarray:
    return views[..., 0] if views.shape[-1] == 1 else to_luminance(views)[..., 0]


def frame_scores(pred: LightFieldFrame, gt: LightFieldFrame) -> dict:
    """PSNR over all views, mean per-view SSIM, and PSNR over non-center views."""
    if pred.sais.shape != gt.sais.shape:
        raise ShapeError(f"frame shapes differ: {pred.sais.shape} vs {gt.sais.shape}")
    pv, gv = pred.views(), gt.views()
    lum_p, lum_g = _luma(pv), _luma(gv)
    ssims = [ssim(lum_p[i], lum_g[i]) for i in range(len(pv))]
    keep = np.arange(len(pv)) != CENTER_INDEX
    return {
        "psnr": psnr(pv, gv),
        "ssim": float(np.mean(ssims)),
        "psnr_noncenter": psnr(pv[keep], gv[keep]),
    }


def video_temporal_error(
    video: LightFieldVideo,
    flow_fw: np.ndarray | None = None,
    flow_bw: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
) -> tuple[float, list[float]]:
    """Mean warping error over consecutive frame pairs, and the per-pair values.

    ``flow_fw[t]`` maps frame t onto frame t-1's grid and ``flow_bw[t]`` the
    reverse (index 0 is unused). Without flows every pair uses zero flow and
    a full mask. Pairs whose valid mask is empty are skipped with a warning;
    a video with no usable pair gives ``nan``.
    """
    n = len(video)
    h, w = video.frames[0].height, video.frames[0].width
    if flow_fw is None:
        flow_fw = np.zeros((n, h, w, 2), dtype=np.float32)
        flow_bw = flow_fw
    elif flow_bw is None:
        raise ValueError("flow_bw is required when flow_fw is given")
    flow_fw = np.asarray(flow_fw)
    flow_bw = np.asarray(flow_bw)
    if flow_fw.shape != (n, h, w, 2) or flow_bw.shape != flow_fw.shape:
        raise ShapeError(f"flows must be ({n}, {h}, {w}, 2), got {flow_fw.shape} and {flow_bw.shape}")
    errors = []
    for t in range(1, n):
        mask = valid_mask(flow_fw[t], flow_bw[t], tol)
        if not mask.any():
            warnings.warn(f"frame {t}: empty valid mask, pair skipped", RuntimeWarning, stacklevel=2)
            continue
        errors.append(temporal_error(video.frames[t], video.frames[t - 1], flow_fw[t], mask))
    return (float(np.mean(errors)) if errors else math.nan), errors


@dataclass
class EvalReport:
    """Per-frame rows plus video averages."""

    rows: list[dict]
    psnr: float
    ssim: float
    psnr_noncenter: float
    e_temp: float
    e_temp_gt: float
    extra: dict = field(default_factory=dict)

    @property
    def e_temp_delta(self) -> float:
        """Warping error in excess of the ground truth's own."""
        return self.e_temp - self.e_temp_gt

    def summary(self) -> dict:
        return {
            "psnr": self.psnr,
            "ssim": self.ssim,
            "psnr_noncenter": self.psnr_noncenter,
            "e_temp": self.e_temp,
            "e_temp_gt": self.e_temp_gt,
            "e_temp_delta": self.e_temp_delta,
            **self.extra,
        }


def _gt_flows(gt: LightFieldVideo):
    meta = gt.metadata or {}
    fw, bw = meta.get("flow_fw"), meta.get("flow_bw")
    if fw is None or bw is None:
        return None, None
    return np.asarray(fw), np.asarray(bw)


def evaluate_video(pred: LightFieldVideo, gt: LightFieldVideo, tol: float = DEFAULT_TOL) -> EvalReport:
    """Score ``pred`` against ``gt``.

    The warping error uses the ground-truth flows stored in ``gt.metadata``
    (zero flow and a full mask when absent) for both videos, so identical
    inputs give a zero ``e_temp_delta``.
    """
    if len(pred) != len(gt):
        raise ShapeError(f"videos differ in length: {len(pred)} vs {len(gt)}")
    fw, bw = _gt_flows(gt)
    e_pred, per_pair = video_temporal_error(pred, fw, bw, tol)
    e_gt, _ = video_temporal_error(gt, fw, bw, tol)
    rows = []
    for t, (p, g) in enumerate(zip(pred.frames, gt.frames)):
        row = {"frame": t, **frame_scores(p, g), "e_temp": math.nan}
        rows.append(row)
    # per-pair errors belong to the later frame of each pair
    if len(per_pair) == len(rows) - 1:
        for row, e in zip(rows[1:], per_pair):
            row["e_temp"] = e
    return EvalReport(
        rows=rows,
        psnr=float(np.mean([r["psnr"] for r in rows])),
        ssim=float(np.mean([r["ssim"] for r in rows])),
        psnr_noncenter=float(np.mean([r["psnr_noncenter"] for r in rows])),
        e_temp=e_pred,
        e_temp_gt=e_gt,
    )


def _fmt(x: float, digits: int = 4) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, float) and math.isnan(x):
        return "n/a"
    return f"{x:.{digits}f}"


def format_quality_table(results: Mapping[str, tuple[float, float]]) -> str:
    """Method-by-metric table of average PSNR (dB) and SSIM."""
    lines = [f"{'Method':<24}{'PSNR (dB)':>12}{'SSIM':>10}"]
    for name, (p, s) in results.items():
        lines.append(f"{name:<24}{_fmt(p, 2):>12}{_fmt(s, 3):>10}")
    return "\n".join(lines)


def format_temporal_table(results: Mapping[str, float]) -> str:
    """Method-by-metric table of the mean warping error."""
    lines = [f"{'Method':<24}{'E_temp':>12}"]
    for name, e in results.items():
        lines.append(f"{name:<24}{_fmt(e, 4):>12}")
    return "\n".join(lines)


def write_report(report: EvalReport, out_dir, method: str = "prediction") -> tuple[Path, Path]:
    """Write ``metrics.csv`` (per frame plus an ``average`` row) and ``summary.txt``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FRAME_FIELDS)
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: _fmt(row[k], 6) if k != "frame" else row[k] for k in FRAME_FIELDS})
        writer.writerow(
            {
                "frame": "average",
                "psnr": _fmt(report.psnr, 6),
                "ssim": _fmt(report.ssim, 6),
                "psnr_noncenter": _fmt(report.psnr_noncenter, 6),
                "e_temp": _fmt(report.e_temp, 6),
            }
        )
    text = "\n".join(
        [
            "Synthesis quality (average over all views and frames)",
            format_quality_table({method: (report.psnr, report.ssim)}),
            "",
            "Temporal stability (mean warping error over the video)",
            format_temporal_table({method: report.e_temp, "ground truth": report.e_temp_gt}),
            "",
            f"non-center PSNR (dB): {_fmt(report.psnr_noncenter, 2)}",
            f"E_temp minus ground truth: {_fmt(report.e_temp_delta, 4)}",
            "",
        ]
    )
    txt_path = out_dir / "summary.txt"
    txt_path.write_text(text)
    return csv_path, txt_path


def read_report(path) -> list[dict]:
    """Parse ``metrics.csv``; ``inf``/``n/a`` become ``inf``/``nan``."""
    def conv(v: str):
        if v == "inf":
            return math.inf
        if v == "n/a":
            return math.nan
        try:
            return float(v)
        except ValueError:
            return v

    with open(path, newline="") as fh:
        return [{k: conv(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def mean_over(reports: Sequence[EvalReport], key: str) -> float:
    return float(np.mean([r.summary()[key] for r in reports]))


__all__ = [
    "EvalReport",
    "FRAME_FIELDS",
    "evaluate_video",
    "format_quality_table",
    "format_temporal_table",
    "frame_scores",
    "mean_over",
    "read_report",
    "video_temporal_error",
    "write_report",
]
