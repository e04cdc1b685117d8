"""Checkpoint files: a flat binary blob plus a JSON index.

``<path>.bin`` holds the raw little-endian parameter arrays back to back;
``<path>.json`` maps each name to ``offset`` (bytes), ``shape`` and
``dtype`` and may carry an arbitrary ``extra`` object (config, step count).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".bin", ".json") else p
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def save_checkpoint(path, arrays: dict[str, np.ndarray], extra: dict | None = None) -> Path:
    """Write ``arrays`` and return the path of the JSON index."""
    bin_path, idx_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    index = {"format": "lfvideo-checkpoint", "version": 1, "tensors": {}, "extra": extra or {}}
    offset = 0
    tmp_bin = bin_path.with_name(bin_path.name + ".tmp")
    with open(tmp_bin, "wb") as fh:
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr)
            le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            raw = le.tobytes()
            index["tensors"][name] = {
                "offset": offset,
                "shape": list(arr.shape),
                "dtype": le.dtype.str,
            }
            fh.write(raw)
            offset += len(raw)
    tmp_idx = idx_path.with_name(idx_path.name + ".tmp")
    tmp_idx.write_text(json.dumps(index, indent=2, sort_keys=True))
    os.replace(tmp_bin, bin_path)
    os.replace(tmp_idx, idx_path)
    return idx_path


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint; returns ``(arrays, extra)``."""
    bin_path, idx_path = _paths(path)
    index = json.loads(idx_path.read_text())
    if index.get("format") != "lfvideo-checkpoint":
        raise ValueError(f"{idx_path} is not a checkpoint index")
    blob = bin_path.read_bytes()
    arrays = {}
    for name, meta in index["tensors"].items():
        dtype = np.dtype(meta["dtype"])
        count = int(np.prod(meta["shape"])) if meta["shape"] else 1
        end = meta["offset"] + count * dtype.itemsize
        if end > len(blob):
            raise ValueError(f"checkpoint blob truncated at {name}")
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=meta["offset"])
        arrays[name] = arr.reshape(meta["shape"]).astype(dtype.newbyteorder("="))
    return arrays, index.get("extra", {})
