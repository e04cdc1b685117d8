"""Light-field data model and non-differentiable light-field utilities.

A light-field frame stores its 9x9 grid of sub-aperture images (SAIs) as one
array of shape ``(9, 9, H, W, C)`` indexed ``[u + 4, v + 4]``: the first
angular axis ``u`` moves the viewpoint horizontally (parallax along ``x``),
the second ``v`` vertically (parallax along ``y``). Images are ``(H, W, C)``
float arrays with values in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._sampling import translate
from ._validation import ShapeError, check_image, check_same_shape

ANGULAR_RES = 9
ANGULAR_HALF = ANGULAR_RES // 2
N_VIEWS = ANGULAR_RES * ANGULAR_RES
CENTER_INDEX = N_VIEWS // 2

LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 1.0 - (LUMA_R + LUMA_G)  # 0.114, chosen so the weights sum to exactly 1


class AngularCoord(NamedTuple):
    """Angular position of a view; ``(0, 0)`` is the center view."""

    u: int
    v: int

    @classmethod
    def checked(cls, u: int, v: int) -> "AngularCoord":
        if not (-ANGULAR_HALF <= u <= ANGULAR_HALF and -ANGULAR_HALF <= v <= ANGULAR_HALF):
            raise ValueError(f"angular coordinate ({u}, {v}) outside [-4, 4]^2")
        return cls(int(u), int(v))

    @property
    def index(self) -> int:
        """Position in the flattened u-major view order."""
        return (self.u + ANGULAR_HALF) * ANGULAR_RES + (self.v + ANGULAR_HALF)


def angular_grid() -> list[AngularCoord]:
    """All 81 coordinates in storage (u-major) order."""
    r = range(-ANGULAR_HALF, ANGULAR_HALF + 1)
    return [AngularCoord(u, v) for u in r for v in r]


def angular_offsets(dtype=np.float32) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(du, dv)`` of length 81 in storage order."""
    g = np.array(angular_grid(), dtype=dtype)
    return g[:, 0].copy(), g[:, 1].copy()


@dataclass(frozen=True)
class LightFieldFrame:
    """One 4-D light field: a complete 9x9 grid of equally shaped SAIs."""

    sais: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        arr = np.asarray(self.sais)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        if arr.ndim == 4:
            arr = arr[..., None]
        if arr.ndim != 5 or arr.shape[:2] != (ANGULAR_RES, ANGULAR_RES):
            raise ShapeError(f"sais must be (9, 9, H, W, C), got {arr.shape}")
        if arr.shape[-1] not in (1, 3):
            raise ShapeError(f"SAIs must have 1 or 3 channels, got {arr.shape[-1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("light field contains non-finite values")
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "sais", arr)
        object.__setattr__(self, "timestamp", int(self.timestamp))

    @classmethod
    def from_views(cls, views: np.ndarray | Sequence[np.ndarray], timestamp: int = 0) -> "LightFieldFrame":
        """Build from 81 images given in u-major order."""
        views = np.asarray(views)
        if views.shape[0] != N_VIEWS:
            raise ShapeError(f"expected 81 views, got {views.shape[0]}")
        return cls(views.reshape((ANGULAR_RES, ANGULAR_RES) + views.shape[1:]), timestamp)

    @property
    def height(self) -> int:
        return self.sais.shape[2]

    @property
    def width(self) -> int:
        return self.sais.shape[3]

    @property
    def channels(self) -> int:
        return self.sais.shape[4]

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return self.sais.shape[2:]

    def views(self) -> np.ndarray:
        """The SAIs as an (81, H, W, C) array in u-major order."""
        return self.sais.reshape((N_VIEWS,) + self.sais.shape[2:])

    def sai(self, u: int, v: int) -> np.ndarray:
        c = AngularCoord.checked(u, v)
        return self.sais[c.u + ANGULAR_HALF, c.v + ANGULAR_HALF]

    @property
    def center(self) -> np.ndarray:
        return self.sais[ANGULAR_HALF, ANGULAR_HALF]


@dataclass
class LightFieldVideo:
    """Time-ordered light-field frames plus optional ground truth.

    ``metadata`` may hold per-frame lists under ``"disparity"`` (H, W),
    ``"flow_fw"``/``"flow_bw"`` (H, W, 2) and ``"occlusion"`` (H, W), and
    scalars such as ``"eta"``.
    """

    frames: list[LightFieldFrame]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.frames:
            return
        shape = self.frames[0].sais.shape
        for prev, cur in zip(self.frames, self.frames[1:]):
            if cur.timestamp <= prev.timestamp:
                raise ValueError("frame timestamps must be strictly increasing")
            if cur.sais.shape != shape:
                raise ShapeError("all frames must share one shape")

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[LightFieldFrame]:
        return iter(self.frames)

    def __getitem__(self, i: int) -> LightFieldFrame:
        return self.frames[i]

    def center_frames(self) -> np.ndarray:
        """Center views as a (T, H, W, C) array, i.e. the monocular video."""
        return np.stack([f.center for f in self.frames])


def _as_frame(lf) -> LightFieldFrame:
    if isinstance(lf, LightFieldFrame):
        return lf
    return LightFieldFrame(lf)


def to_luminance(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an RGB array; the trailing channel axis (3) becomes 1."""
    arr = np.asarray(img)
    if arr.ndim < 3 or arr.shape[-1] != 3:
        raise ShapeError(f"to_luminance needs 3 channels on the last axis, got shape {arr.shape}")
    x = arr.astype(np.float64, copy=False)
    y = x[..., 0] * LUMA_R + x[..., 1] * LUMA_G + x[..., 2] * LUMA_B
    out_dtype = arr.dtype if np.issubdtype(arr.dtype, np.floating) else np.float32
    return np.clip(y, 0.0, 1.0)[..., None].astype(out_dtype)


def mean_image(lf) -> np.ndarray:
    """Per-pixel mean over all 81 SAIs, accumulated in float64."""
    return _as_frame(lf).views().mean(axis=0, dtype=np.float64)


def variance_image(lf) -> np.ndarray:
    """Per-pixel population variance (divide by 81) over all SAIs, in float64."""
    return _as_frame(lf).views().var(axis=0, dtype=np.float64)


def variance_mask(
    var: np.ndarray,
    threshold: float | None = None,
    percentile: float = 90.0,
    eta: float = 1.0,
) -> np.ndarray:
    """Binarize a variance image into one mask per view.

    The variance image is first shifted to each view position with the same
    rule as input shifting (``out(x) = var(x - eta * du)``), then compared
    against ``threshold``; when no fixed threshold is given, the
    ``percentile`` of ``var`` is used. Returns a (9, 9, H, W) uint8 array.
    """
    v = check_image(var, "variance", channels=(1,))
    if np.any(v < 0):
        raise ValueError("variance image must be non-negative")
    thr = float(np.percentile(v, percentile)) if threshold is None else float(threshold)
    masks = np.zeros((ANGULAR_RES, ANGULAR_RES) + v.shape[:2], dtype=np.uint8)
    for c in angular_grid():
        shifted = translate(v, eta * c.u, eta * c.v)
        masks[c.u + ANGULAR_HALF, c.v + ANGULAR_HALF] = shifted[..., 0] > thr
    return masks


def extract_epi(lf, row: int | None = None, v: int = 0, col: int | None = None, u: int = 0) -> np.ndarray:
    """Epipolar-plane image.

    With ``row`` (and angular ``v``) fixed, stacks scanline ``row`` of the
    views ``u = -4..4`` into a (9, W, C) image; with ``col`` (and ``u``)
    fixed, stacks column ``col`` of views ``v = -4..4`` into (9, H, C).
    A scene point at disparity ``d`` traces a line of slope ``d`` px/view.
    """
    frame = _as_frame(lf)
    if (row is None) == (col is None):
        raise ValueError("give exactly one of row or col")
    if row is not None:
        if not 0 <= row < frame.height:
            raise IndexError(f"row {row} outside [0, {frame.height})")
        AngularCoord.checked(0, v)
        return frame.sais[:, v + ANGULAR_HALF, row, :, :].copy()
    if not 0 <= col < frame.width:
        raise IndexError(f"col {col} outside [0, {frame.width})")
    AngularCoord.checked(u, 0)
    return frame.sais[u + ANGULAR_HALF, :, :, col, :].copy()


def refocus(lf, disparity: float) -> np.ndarray:
    """Shift-and-add refocusing at ``disparity`` px/view.

    Each view is resampled at ``x + d * du`` (moving its content back toward
    the center view) and the results are averaged. Borders are edge-clamped.
    """
    frame = _as_frame(lf)
    d = float(disparity)
    if abs(d * ANGULAR_HALF) >= min(frame.height, frame.width):
        raise ValueError(f"disparity {d} shifts views beyond the image extent")
    views = frame.views()
    shifted = np.stack([translate(views[c.index], -d * c.u, -d * c.v) for c in angular_grid()])
    return shifted.mean(axis=0, dtype=np.float64)


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / mse)


SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    k = len(taps)
    out = sliding_window_view(img, k, axis=0) @ taps
    return sliding_window_view(out, k, axis=1) @ taps


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Mean structural similarity of two single-channel images.

    Gaussian 11x11 window (sigma 1.5), K1 = 0.01, K2 = 0.03, statistics taken
    over every fully contained window position.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    if a.ndim == 3:
        if a.shape[-1] != 1:
            raise ShapeError("ssim expects single-channel images; convert with to_luminance")
        a, b = a[..., 0], b[..., 0]
    if a.ndim != 2:
        raise ShapeError(f"ssim expects (H, W) images, got {a.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ShapeError(f"images smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    taps = gaussian_window()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a = _filter_valid(a, taps)
    mu_b = _filter_valid(b, taps)
    var_a = _filter_valid(a * a, taps) - mu_a**2
    var_b = _filter_valid(b * b, taps) - mu_b**2
    cov = _filter_valid(a * b, taps) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
