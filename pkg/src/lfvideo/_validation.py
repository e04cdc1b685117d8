"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Array has the wrong shape or channel count."""


def check_image(img, name: str = "image", channels: tuple[int, ...] = (1, 3), allow_2d: bool = True) -> np.ndarray:
    """Return ``img`` as a floating (H, W, C) array.

    A 2-D input is read as a single-channel image when ``allow_2d``.
    """
    arr = np.asarray(img)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    if arr.ndim == 2 and allow_2d:
        arr = arr[..., None]
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be (H, W, C), got shape {arr.shape}")
    if channels and arr.shape[-1] not in channels:
        raise ShapeError(f"{name} must have {' or '.join(map(str, channels))} channels, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_flow(flow, shape: tuple[int, int] | None = None, name: str = "flow") -> np.ndarray:
    """Return ``flow`` as an (H, W, 2) float array of (dx, dy) displacements."""
    arr = np.asarray(flow)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ShapeError(f"{name} must be (H, W, 2), got shape {arr.shape}")
    if shape is not None and arr.shape[:2] != tuple(shape):
        raise ShapeError(f"{name} spatial shape {arr.shape[:2]} does not match {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, names=("a", "b")) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{names[0]} shape {a.shape} does not match {names[1]} shape {b.shape}")
