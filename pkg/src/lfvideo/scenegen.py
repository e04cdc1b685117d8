"""Procedural light-field videos with exact ground truth.

Scenes are stacks of fronto-parallel Lambertian layers. In view ``(u, v)``
at frame ``t`` a layer with disparity ``d`` and velocity ``vel`` shows its
texture at ``x - d*u - t*vel_x, y - d*v - t*vel_y``; layers are composited
back to front. Because every quantity is a closed-form function of that
mapping, disparity, optical flow and occlusion come out exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import _sampling
from .core import ANGULAR_HALF, AngularCoord, LightFieldFrame, LightFieldVideo, angular_grid

SHAPES = ("full", "rect", "disk")


@dataclass
class Layer:
    """One textured plane.

    ``center`` and ``size`` are in layer coordinates (the center view at
    frame 0). ``size`` is the half-extent ``(hw, hh)`` for rectangles and
    ``(r, r)`` for disks; both are ignored for the full-plane background.
    ``colors`` holds two RGB endpoints blended by the noise texture; when
    they are equal the layer is flat.
    """

    disparity: float
    texture_seed: int = 0
    shape: str = "full"
    center: tuple[float, float] = (0.0, 0.0)
    size: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    colors: tuple[tuple[float, float, float], tuple[float, float, float]] | None = None
    cell: float = 12.0

    def covers(self, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
        if self.shape == "full":
            return np.ones(sx.shape, dtype=bool)
        cx, cy = self.center
        if self.shape == "rect":
            hw, hh = self.size
            return (np.abs(sx - cx) <= hw) & (np.abs(sy - cy) <= hh)
        r = self.size[0]
        return (sx - cx) ** 2 + (sy - cy) ** 2 <= r * r


@dataclass
class SceneSpec:
    """Declarative scene: background first, then layers ordered far to near."""

    layers: list[Layer]
    frame_count: int = 4
    height: int = 64
    width: int = 64
    eta_scene: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if not self.layers:
            raise ValueError("scene has no layers")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.height < 2 or self.width < 2:
            raise ValueError("image must be at least 2x2")
        full = [i for i, layer in enumerate(self.layers) if layer.shape == "full"]
        if full != [0]:
            raise ValueError("exactly one full-plane background is required, as the first layer")
        for layer in self.layers:
            if layer.shape not in SHAPES:
                raise ValueError(f"unknown silhouette {layer.shape!r}")
            if abs(layer.disparity) * ANGULAR_HALF >= self.width / 4:
                raise ValueError(
                    f"disparity {layer.disparity} too large: 4*|d| must stay below width/4 = {self.width / 4}"
                )
        disp = [layer.disparity for layer in self.layers]
        if any(b <= a for a, b in zip(disp, disp[1:])):
            raise ValueError("layer disparities must increase strictly from far to near")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        layers = []
        for ld in d.pop("layers"):
            ld = dict(ld)
            for key in ("center", "size", "velocity"):
                if key in ld:
                    ld[key] = tuple(ld[key])
            if ld.get("colors") is not None:
                ld["colors"] = tuple(tuple(c) for c in ld["colors"])
            layers.append(Layer(**ld))
        return cls(layers=layers, **d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _value_noise(h: int, w: int, cell: float, rng: np.random.Generator) -> np.ndarray:
    gh = int(np.ceil(h / cell)) + 2
    gw = int(np.ceil(w / cell)) + 2
    lattice = rng.random((gh, gw)).astype(np.float64)
    y = np.arange(h) / cell
    x = np.arange(w) / cell
    y0 = np.floor(y).astype(int)
    x0 = np.floor(x).astype(int)
    ty = _smoothstep(y - y0)[:, None]
    tx = _smoothstep(x - x0)[None, :]
    a = lattice[np.ix_(y0, x0)]
    b = lattice[np.ix_(y0, x0 + 1)]
    c = lattice[np.ix_(y0 + 1, x0)]
    d = lattice[np.ix_(y0 + 1, x0 + 1)]
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty


def layer_texture(layer: Layer, h: int, w: int) -> np.ndarray:
    """Rasterize a layer's texture onto an (h, w, 3) float32 grid.

    Two octaves of smooth value noise blend the layer's two colors.
    """
    rng = np.random.default_rng(layer.texture_seed)
    if layer.colors is None:
        c0 = rng.uniform(0.05, 0.5, 3)
        c1 = rng.uniform(0.5, 0.95, 3)
    else:
        c0, c1 = (np.asarray(c, dtype=np.float64) for c in layer.colors)
    noise = 0.65 * _value_noise(h, w, layer.cell, rng) + 0.35 * _value_noise(h, w, layer.cell / 2, rng)
    tex = c0[None, None] * (1 - noise[..., None]) + c1[None, None] * noise[..., None]
    return np.clip(tex, 0.0, 1.0).astype(np.float32)


def _margin(spec: SceneSpec) -> int:
    reach = 0.0
    for layer in spec.layers:
        vel = max(abs(layer.velocity[0]), abs(layer.velocity[1]))
        reach = max(reach, abs(layer.disparity) * ANGULAR_HALF + vel * max(spec.frame_count - 1, 0))
    return int(np.ceil(reach)) + 2


def _layer_coords(layer: Layer, coord: AngularCoord, t: int, xs, ys):
    sx = xs - layer.disparity * coord.u - t * layer.velocity[0]
    sy = ys - layer.disparity * coord.v - t * layer.velocity[1]
    return sx, sy


def render_view(spec: SceneSpec, textures: list[np.ndarray], margin: int, coord: AngularCoord, t: int):
    """Render one SAI; returns ``(image, label)`` with the visible layer index per pixel."""
    h, w = spec.height, spec.width
    xs, ys = _sampling.pixel_grid(h, w, np.float64)
    img = np.zeros((h, w, 3), dtype=np.float32)
    label = np.zeros((h, w), dtype=np.int16)
    for i, (layer, tex) in enumerate(zip(spec.layers, textures)):
        sx, sy = _layer_coords(layer, coord, t, xs, ys)
        cov = layer.covers(sx, sy)
        if not cov.any():
            continue
        src = np.moveaxis(tex, -1, 0)[None]
        val, _ = _sampling.sample(src, (sx + margin)[None], (sy + margin)[None])
        val = np.moveaxis(val[0], 0, -1)
        img[cov] = val[cov]
        label[cov] = i
    return img, label


def render_video(spec: SceneSpec) -> LightFieldVideo:
    """Render every view of every frame, with per-frame ground truth.

    Metadata (all for the center view):

    ``disparity``  (T, H, W) disparity of the visible surface;
    ``flow_fw``    (T, H, W, 2) flow t -> t-1 on frame t-1's grid (zero at t=0);
    ``flow_bw``    (T, H, W, 2) flow t-1 -> t on frame t's grid (zero at t=0);
    ``occlusion``  (T, H, W) 1 where the visible layer differs across views;
    ``labels``     (T, H, W) visible layer index.
    """
    spec.validate()
    margin = _margin(spec)
    th, tw = spec.height + 2 * margin, spec.width + 2 * margin
    textures = [layer_texture(layer, th, tw) for layer in spec.layers]
    disp_of = np.array([layer.disparity for layer in spec.layers], dtype=np.float32)
    vel_of = np.array([layer.velocity for layer in spec.layers], dtype=np.float32)

    grid = angular_grid()
    center_idx = AngularCoord(0, 0).index
    frames, disparity, occlusion, labels = [], [], [], []
    for t in range(spec.frame_count):
        views = np.empty((len(grid), spec.height, spec.width, 3), dtype=np.float32)
        view_labels = np.empty((len(grid), spec.height, spec.width), dtype=np.int16)
        for c in grid:
            views[c.index], view_labels[c.index] = render_view(spec, textures, margin, c, t)
        frames.append(LightFieldFrame.from_views(views, timestamp=t))
        lab = view_labels[center_idx]
        labels.append(lab)
        disparity.append(disp_of[lab])
        occlusion.append(np.any(view_labels != lab[None], axis=0).astype(np.uint8))

    flow_fw = np.zeros((spec.frame_count, spec.height, spec.width, 2), dtype=np.float32)
    flow_bw = np.zeros_like(flow_fw)
    for t in range(1, spec.frame_count):
        flow_fw[t] = vel_of[labels[t - 1]]
        flow_bw[t] = -vel_of[labels[t]]

    meta = {
        "disparity": np.stack(disparity),
        "flow_fw": flow_fw,
        "flow_bw": flow_bw,
        "occlusion": np.stack(occlusion),
        "labels": np.stack(labels),
        "eta": float(spec.eta_scene),
        "scene": spec.to_dict(),
    }
    return LightFieldVideo(frames, meta)


def gt_appearance_flow(spec: SceneSpec, coord: tuple[int, int], eta: float, t: int = 0) -> np.ndarray:
    """Flow that, applied after input shifting by ``eta``, reproduces view ``coord``.

    For the visible surface with disparity ``d(p)`` at pixel ``p`` of the
    target view the flow is ``(eta - d(p)) * (du, dv)``: sampling the shifted
    center view there lands on ``p - d(p) * du`` of the center view.
    """
    spec.validate()
    c = AngularCoord.checked(*coord)
    margin = _margin(spec)
    th, tw = spec.height + 2 * margin, spec.width + 2 * margin
    # labels only; flat placeholder textures avoid the noise cost
    textures = [np.zeros((th, tw, 3), dtype=np.float32) for _ in spec.layers]
    _, label = render_view(spec, textures, margin, c, t)
    d = np.array([layer.disparity for layer in spec.layers], dtype=np.float32)[label]
    scale = (eta - d)[..., None]
    return (scale * np.array([c.u, c.v], dtype=np.float32)).astype(np.float32)


def planar_scene(
    disparity: float,
    seed: int = 0,
    height: int = 64,
    width: int = 64,
    frame_count: int = 1,
    velocity: tuple[float, float] = (0.0, 0.0),
    eta_scene: float = 1.0,
) -> SceneSpec:
    """Single textured plane: the occlusion-free case used by geometry checks."""
    return SceneSpec(
        layers=[Layer(disparity=disparity, texture_seed=seed, velocity=velocity)],
        frame_count=frame_count,
        height=height,
        width=width,
        eta_scene=eta_scene,
        seed=seed,
    )


DEFAULT_TEMPLATE = {
    "height": 64,
    "width": 64,
    "frame_count": 4,
    "eta_scene": 1.0,
    "layer_range": [2, 4],
    "disparity_range": [0.0, 3.0],
    "velocity_range": [-2.0, 2.0],
}


def random_scene(seed: int, template: dict | None = None) -> SceneSpec:
    """Draw a random layered scene from ``template`` (see ``DEFAULT_TEMPLATE``)."""
    tpl = {**DEFAULT_TEMPLATE, **(template or {})}
    rng = np.random.default_rng(seed)
    h, w = int(tpl["height"]), int(tpl["width"])
    lo, hi = tpl["disparity_range"]
    # keep the validation bound 4*|d| < w/4 with a small safety gap
    hi = min(hi, w / 16 - 1e-3)
    vlo, vhi = tpl["velocity_range"]
    n_layers = int(rng.integers(tpl["layer_range"][0], tpl["layer_range"][1] + 1))
    disp = np.sort(rng.uniform(lo, hi, n_layers))
    while np.any(np.diff(disp) <= 1e-3):
        disp = np.sort(rng.uniform(lo, hi, n_layers))
    layers = [
        Layer(
            disparity=float(disp[0]),
            texture_seed=int(rng.integers(2**31)),
            velocity=tuple(float(x) for x in rng.uniform(vlo, vhi, 2)),
            cell=float(rng.uniform(10, 16)),
        )
    ]
    for d in disp[1:]:
        shape = str(rng.choice(["rect", "disk"]))
        ext = float(rng.uniform(0.12, 0.25) * min(h, w))
        size = (ext, float(rng.uniform(0.12, 0.25) * min(h, w))) if shape == "rect" else (ext, ext)
        layers.append(
            Layer(
                disparity=float(d),
                texture_seed=int(rng.integers(2**31)),
                shape=shape,
                center=(float(rng.uniform(0.2, 0.8) * w), float(rng.uniform(0.2, 0.8) * h)),
                size=size,
                velocity=tuple(float(x) for x in rng.uniform(vlo, vhi, 2)),
                cell=float(rng.uniform(6, 12)),
            )
        )
    return SceneSpec(
        layers=layers,
        frame_count=int(tpl["frame_count"]),
        height=h,
        width=w,
        eta_scene=float(tpl["eta_scene"]),
        seed=int(seed),
    )


def split_seeds(n_scenes: int, seed: int, split: str) -> list[int]:
    """Scene seeds for a split; train seeds are even and test seeds odd."""
    if split not in ("train", "test"):
        raise ValueError(f"unknown split {split!r}")
    parity = 0 if split == "train" else 1
    base = int(seed) * 1_000_000
    return [2 * (base + i) + parity for i in range(n_scenes)]


def make_dataset(n_scenes: int, template: dict | None = None, seed: int = 0, split: str = "train") -> list[LightFieldVideo]:
    """Render ``n_scenes`` random videos for one split."""
    if n_scenes < 1:
        raise ValueError("n_scenes must be >= 1")
    return [render_video(random_scene(s, template)) for s in split_seeds(n_scenes, seed, split)]


def scene_specs(n_scenes: int, template: dict | None = None, seed: int = 0, split: str = "train") -> list[SceneSpec]:
    if n_scenes < 1:
        raise ValueError("n_scenes must be >= 1")
    return [random_scene(s, template) for s in split_seeds(n_scenes, seed, split)]


__all__: Sequence[str] = [
    "DEFAULT_TEMPLATE",
    "Layer",
    "SceneSpec",
    "gt_appearance_flow",
    "layer_texture",
    "make_dataset",
    "planar_scene",
    "random_scene",
    "render_video",
    "scene_specs",
    "split_seeds",
]
