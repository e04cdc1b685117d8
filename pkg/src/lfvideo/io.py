"""Light-field video container on disk.

Layout::

    <dir>/meta.json
    <dir>/scene.json                      (optional, scenegen runs)
    <dir>/frame_0000/sai_u-4_v-4.png      (81 SAIs, .png 8-bit or .pfm float32)
    <dir>/frame_0000/disparity.pfm        (optional ground truth)
    <dir>/frame_0000/flow_fw.pfm          (optional, flow t -> t-1)
    <dir>/frame_0000/flow_bw.pfm          (optional, flow t-1 -> t)
    <dir>/frame_0000/occlusion.png        (optional)

Flow fields are stored as 3-channel PFM with a zero third channel, since the
PFM header has no 2-channel variant.
"""

from __future__ import annotations

import json
import os
import re
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .core import ANGULAR_RES, LightFieldFrame, LightFieldVideo, angular_grid

FORMAT_NAME = "lfvideo-container"
GT_KEYS = ("disparity", "flow_fw", "flow_bw", "occlusion")


def write_pfm(path, arr: np.ndarray) -> None:
    """Write a 1- or 3-channel float image as little-endian PFM."""
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim == 3 and a.shape[-1] == 1:
        a = a[..., 0]
    if a.ndim == 2:
        header = "Pf"
    elif a.ndim == 3 and a.shape[-1] == 3:
        header = "PF"
    else:
        raise ValueError(f"PFM holds 1 or 3 channels, got shape {a.shape}")
    h, w = a.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"{header}\n{w} {h}\n-1.0\n".encode("ascii"))
        # PFM scanlines run bottom to top
        fh.write(np.ascontiguousarray(a[::-1]).astype("<f4").tobytes())


_PFM_HEADER = re.compile(rb"^(PF|Pf)\s+(\d+)\s+(\d+)\s+(-?[0-9.eE+-]+)\s")


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into an (H, W) or (H, W, 3) float32 array."""
    raw = Path(path).read_bytes()
    m = _PFM_HEADER.match(raw)
    if m is None:
        raise ValueError(f"{path}: not a PFM file")
    kind, w, h, scale = m.group(1), int(m.group(2)), int(m.group(3)), float(m.group(4))
    ch = 3 if kind == b"PF" else 1
    dtype = "<f4" if scale < 0 else ">f4"
    count = w * h * ch
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=m.end())
    shape = (h, w, ch) if ch == 3 else (h, w)
    return data.reshape(shape)[::-1].astype(np.float32)


def write_flow(path, flow: np.ndarray) -> None:
    f = np.asarray(flow, dtype=np.float32)
    if f.ndim != 3 or f.shape[-1] != 2:
        raise ValueError(f"flow must be (H, W, 2), got {f.shape}")
    write_pfm(path, np.concatenate([f, np.zeros_like(f[..., :1])], axis=-1))


def read_flow(path) -> np.ndarray:
    a = read_pfm(path)
    if a.ndim != 3:
        raise ValueError(f"{path}: flow PFM must have 3 channels")
    return a[..., :2].copy()


def write_png(path, img: np.ndarray) -> None:
    """Quantize a [0, 1] image to 8 bits and save it."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 3 and a.shape[-1] == 1:
        a = a[..., 0]
    q = np.clip(np.rint(a * 255.0), 0, 255).astype(np.uint8)
    PILImage.fromarray(q).save(path)


def read_png(path) -> np.ndarray:
    with PILImage.open(path) as im:
        a = np.asarray(im)
    if a.ndim == 2:
        a = a[..., None]
    return (a[..., :3] if a.shape[-1] == 4 else a).astype(np.float32) / 255.0


def sai_filename(u: int, v: int, ext: str) -> str:
    return f"sai_u{u}_v{v}.{ext}"


def frame_dirname(t: int) -> str:
    return f"frame_{t:04d}"


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items() if not isinstance(v, np.ndarray)}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def save_video(video: LightFieldVideo, out_dir, fmt: str = "pfm", extra: dict | None = None) -> Path:
    """Write ``video`` (and any ground truth in its metadata) as a container."""
    if fmt not in ("png", "pfm"):
        raise ValueError(f"unknown SAI format {fmt!r}")
    if not video.frames:
        raise ValueError("cannot save an empty video")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    first = video.frames[0]
    gt_present = [k for k in GT_KEYS if k in video.metadata]
    for i, frame in enumerate(video.frames):
        fdir = out / frame_dirname(i)
        fdir.mkdir(exist_ok=True)
        for c in angular_grid():
            img = frame.sai(c.u, c.v)
            path = fdir / sai_filename(c.u, c.v, fmt)
            if fmt == "pfm":
                write_pfm(path, img)
            else:
                write_png(path, img)
        for key in gt_present:
            val = np.asarray(video.metadata[key][i])
            if key in ("flow_fw", "flow_bw"):
                write_flow(fdir / f"{key}.pfm", val)
            elif key == "occlusion":
                write_png(fdir / "occlusion.png", val.astype(np.float32))
            else:
                write_pfm(fdir / f"{key}.pfm", val)
    meta = {
        "format": FORMAT_NAME,
        "height": first.height,
        "width": first.width,
        "channels": first.channels,
        "angular": [ANGULAR_RES, ANGULAR_RES],
        "frame_count": len(video.frames),
        "timestamps": [f.timestamp for f in video.frames],
        "value_range": [0.0, 1.0],
        "sai_format": fmt,
        "ground_truth": {k: (f"{k}.png" if k == "occlusion" else f"{k}.pfm") for k in gt_present},
    }
    if "eta" in video.metadata:
        meta["eta"] = float(video.metadata["eta"])
    if extra:
        meta.update(_to_jsonable(extra))
    if "scene" in video.metadata:
        (out / "scene.json").write_text(json.dumps(_to_jsonable(video.metadata["scene"]), indent=2))
    tmp = out / "meta.json.tmp"
    tmp.write_text(json.dumps(meta, indent=2))
    os.replace(tmp, out / "meta.json")
    return out


def load_meta(in_dir) -> dict:
    path = Path(in_dir) / "meta.json"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")
    meta = json.loads(path.read_text())
    if meta.get("format") != FORMAT_NAME:
        raise ValueError(f"{path} is not a light-field container")
    return meta


def load_video(in_dir) -> LightFieldVideo:
    """Read a container written by :func:`save_video`."""
    root = Path(in_dir)
    meta = load_meta(root)
    fmt = meta["sai_format"]
    reader = read_pfm if fmt == "pfm" else read_png
    channels = int(meta["channels"])
    frames = []
    gt: dict[str, list] = {k: [] for k in meta.get("ground_truth", {})}
    timestamps = meta.get("timestamps", list(range(meta["frame_count"])))
    for i in range(int(meta["frame_count"])):
        fdir = root / frame_dirname(i)
        views = []
        for c in angular_grid():
            img = reader(fdir / sai_filename(c.u, c.v, fmt))
            if img.ndim == 2:
                img = img[..., None]
            views.append(img[..., :channels])
        frames.append(LightFieldFrame.from_views(np.stack(views), timestamp=timestamps[i]))
        for key, fname in meta.get("ground_truth", {}).items():
            path = fdir / fname
            if key in ("flow_fw", "flow_bw"):
                gt[key].append(read_flow(path))
            elif key == "occlusion":
                gt[key].append((read_png(path)[..., 0] > 0.5).astype(np.uint8))
            else:
                gt[key].append(read_pfm(path))
    metadata: dict = {k: np.stack(v) for k, v in gt.items()}
    if "eta" in meta:
        metadata["eta"] = float(meta["eta"])
    scene_path = root / "scene.json"
    if scene_path.exists():
        metadata["scene"] = json.loads(scene_path.read_text())
    return LightFieldVideo(frames, metadata)
