"""``lfv`` command-line tool.

Every command writes its outputs under ``--out`` and finishes by writing
``manifest.json`` there. Exit codes: 0 success, 2 invalid input or config,
3 I/O failure, 4 non-finite numbers.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import extract_epi, refocus
from .evaluate import evaluate_video, write_report
from .io import load_video, read_pfm, read_png, save_video, write_png
from .model.config import NetworkConfig, _parse_kv
from .model.pipeline import synthesize_video
from .model.train import load_model, save_model, train, write_loss_log
from .nn import NonFiniteError
from .scenegen import DEFAULT_TEMPLATE, make_dataset

log = logging.getLogger("lfvideo")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
MANIFEST = "manifest.json"
GEN_KEYS = {"n_scenes", "split", "format"}


class UsageError(ValueError):
    """Bad arguments or configuration."""


def _read_config(path) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = _parse_kv(text)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a mapping")
    return data


def write_manifest(out_dir: Path, record: dict) -> Path:
    """Atomically write the run manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = out_dir / (MANIFEST + ".tmp")
    tmp.write_text(json.dumps(record, indent=2, sort_keys=True))
    target = out_dir / MANIFEST
    os.replace(tmp, target)
    return target


def _containers(root: Path) -> list[Path]:
    if (root / "meta.json").exists():
        return [root]
    found = sorted(p.parent for p in root.glob("*/meta.json"))
    if not found:
        raise FileNotFoundError(f"no light-field containers under {root}")
    return found


def _load_frames(path: Path) -> np.ndarray:
    """Monocular frames: center views of a container, or a folder of images."""
    if (path / "meta.json").exists():
        video = load_video(path)
        return np.stack([f.center for f in video.frames])
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".png", ".pfm"))
    if not files:
        raise FileNotFoundError(f"no frames in {path}")
    imgs = []
    for f in files:
        img = read_pfm(f) if f.suffix.lower() == ".pfm" else read_png(f)
        imgs.append(img if img.ndim == 3 else img[..., None])
    return np.stack(imgs).astype(np.float32)


def _json_number(v: float):
    # JSON has no inf/nan: keep inf as a string, nan as null
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return None if np.isnan(v) else float(v)


def cmd_gen(args) -> dict:
    cfg = _read_config(args.config)
    unknown = set(cfg) - GEN_KEYS - set(DEFAULT_TEMPLATE)
    if unknown:
        raise UsageError(f"unknown gen config keys: {sorted(unknown)}")
    n = int(cfg.get("n_scenes", args.scenes))
    split = cfg.get("split", args.split)
    fmt = cfg.get("format", args.format)
    template = {k: v for k, v in cfg.items() if k in DEFAULT_TEMPLATE}
    videos = make_dataset(n, template, seed=args.seed, split=split)
    outputs = []
    for i, video in enumerate(videos):
        path = save_video(video, args.out / f"scene_{i:04d}", fmt=fmt)
        outputs.append(str(path))
    return {"outputs": outputs, "n_scenes": n, "split": split}


def cmd_train(args) -> dict:
    cfg_dict = _read_config(args.config)
    cfg_dict["seed"] = args.seed
    if args.iters is not None:
        cfg_dict["total_iters"] = args.iters
    if args.warmup is not None:
        cfg_dict["warmup_iters"] = args.warmup
    cfg = NetworkConfig.from_dict(cfg_dict)
    dataset = [load_video(p) for p in _containers(args.data)]
    result = train(dataset, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt = save_model(args.out / "model", result.net)
    write_loss_log(result.log, args.out / "loss.csv")
    (args.out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2))
    return {
        "inputs": [str(args.data)],
        "outputs": [str(ckpt), str(args.out / "loss.csv")],
        "dropped_terms": dict(result.dropped),
        "final_loss": result.log[-1]["total"] if result.log else None,
    }


def cmd_synth(args) -> dict:
    net = load_model(args.model)
    frames = _load_frames(args.input)
    if frames.shape[-1] != net.channels:
        raise UsageError(f"model expects {net.channels} channels, input has {frames.shape[-1]}")
    video = synthesize_video(net, frames)
    save_video(video, args.out, fmt=args.format)
    return {"inputs": [str(args.model), str(args.input)], "outputs": [str(args.out)], "frames": len(video)}


def cmd_eval(args) -> dict:
    pred = load_video(args.pred)
    gt = load_video(args.gt)
    report = evaluate_video(pred, gt)
    csv_path, txt_path = write_report(report, args.out, method=args.name)
    metrics = {k: _json_number(v) for k, v in report.summary().items()}
    (args.out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True))
    sys.stdout.write(txt_path.read_text())
    return {
        "inputs": [str(args.pred), str(args.gt)],
        "outputs": [str(csv_path), str(txt_path), str(args.out / "metrics.json")],
        "metrics": metrics,
    }


def cmd_refocus(args) -> dict:
    video = load_video(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for t, frame in enumerate(video.frames):
        path = args.out / f"refocus_{t:04d}.png"
        write_png(path, refocus(frame, args.disparity))
        outputs.append(str(path))
    return {"inputs": [str(args.input)], "outputs": outputs, "disparity": args.disparity}


def cmd_epi(args) -> dict:
    if (args.row is None) == (args.col is None):
        raise UsageError("give exactly one of --row or --col")
    video = load_video(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for t, frame in enumerate(video.frames):
        if args.row is not None:
            epi = extract_epi(frame, row=args.row, v=args.angular)
        else:
            epi = extract_epi(frame, col=args.col, u=args.angular)
        path = args.out / f"epi_{t:04d}.png"
        write_png(path, epi)
        outputs.append(str(path))
    return {"inputs": [str(args.input)], "outputs": outputs}


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "refocus": cmd_refocus,
    "epi": cmd_epi,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfv", description="Light-field video synthesis toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="JSON or key = value config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, required=True, help="run directory")
        return p

    p = common(sub.add_parser("gen", help="render a synthetic dataset"))
    p.add_argument("--scenes", type=int, default=4)
    p.add_argument("--split", choices=("train", "test"), default="train")
    p.add_argument("--format", choices=("pfm", "png"), default="pfm")

    p = common(sub.add_parser("train", help="train a model on a dataset"))
    p.add_argument("--data", type=Path, required=True, help="container or folder of containers")
    p.add_argument("--iters", type=int, default=None, help="override total_iters")
    p.add_argument("--warmup", type=int, default=None, help="override warmup_iters")

    p = common(sub.add_parser("synth", help="synthesize a light-field video"))
    p.add_argument("--model", type=Path, required=True, help="checkpoint path (without suffix)")
    p.add_argument("--input", type=Path, required=True, help="container or folder of frames")
    p.add_argument("--format", choices=("pfm", "png"), default="pfm")

    p = common(sub.add_parser("eval", help="score a prediction against ground truth"))
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--name", default="prediction", help="method name in the report")

    p = common(sub.add_parser("refocus", help="refocus every frame"))
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--disparity", type=float, required=True)

    p = common(sub.add_parser("epi", help="extract an EPI per frame"))
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--row", type=int, default=None, help="image row for a horizontal EPI")
    p.add_argument("--col", type=int, default=None, help="image column for a vertical EPI")
    p.add_argument("--angular", type=int, default=0, help="fixed angular coordinate")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    start = time.perf_counter()
    try:
        details = COMMANDS[args.command](args)
    except NonFiniteError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (FileNotFoundError, PermissionError, IsADirectoryError, NotADirectoryError) as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO
    record = {
        "command": args.command,
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "config": str(args.config) if args.config else None,
        "seed": args.seed,
        "out": str(args.out),
        "version": __version__,
        "duration_s": round(time.perf_counter() - start, 3),
        **details,
    }
    write_manifest(args.out, record)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
