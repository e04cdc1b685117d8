"""Feature extraction, flow decoders, synthesis and occlusion refinement.

Tensors inside the network use channel-first layouts. A light field is
``(81, C, H, W)`` with views in u-major order (see :mod:`lfvideo.core`);
single frames are ``(1, C, H, W)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..core import (
    ANGULAR_RES,
    CENTER_INDEX,
    LUMA_B,
    LUMA_G,
    LUMA_R,
    N_VIEWS,
    angular_grid,
    variance_mask,
)
from ..nn import (
    Conv2d,
    Conv3d,
    Module,
    Tensor,
    as_tensor,
    concat,
    correlation,
    leaky_relu,
    tanh,
    upsample_nearest,
    where,
)
from ..warp import shift_input, warp_tensor
from .config import NetworkConfig

PERCEPTUAL_SEED = 20_190_527
PERCEPTUAL_CHANNELS = (16, 32, 64)

_CENTER = np.zeros((N_VIEWS, 1, 1, 1), dtype=bool)
_CENTER[CENTER_INDEX] = True


class Features(NamedTuple):
    """Encoder outputs for a (t, t-1) pair, batched as ``[t, t-1]``."""

    zeta: Tensor  # (2, F, H/s, W/s)
    skips: list[Tensor]  # initial-encoder activations, batched the same way


class FeatureExtractor(Module):
    """Initial encoder, correlation layer and final encoder."""

    def __init__(self, cfg: NetworkConfig, rng: np.random.Generator):
        b = cfg.base_channels
        depth = cfg.encoder_depth
        chans = [b * min(2**i, 4) for i in range(depth)]
        strides = [1 if i % 2 == 0 else 2 for i in range(depth)]
        self.init_layers = []
        prev = 1
        for c, s in zip(chans, strides):
            self.init_layers.append(Conv2d(prev, c, 3, stride=s, padding=1, rng=rng))
            prev = c
        self.feat_channels = prev
        self.conv = Conv2d(prev, prev, 3, rng=rng)
        self.use_correlation = cfg.use_correlation
        self.max_disp = cfg.max_disp
        n_corr = (2 * cfg.max_disp + 1) ** 2 if cfg.use_correlation else 0
        self.fin_layers = [
            Conv2d(n_corr + prev, cfg.fin_channels, 3, rng=rng),
            Conv2d(cfg.fin_channels, cfg.fin_channels, 3, rng=rng),
        ]
        self.skip_channels = (chans[0], chans[-2])

    def encode(self, lum: Tensor) -> list[Tensor]:
        acts = []
        x = lum
        for layer in self.init_layers:
            x = leaky_relu(layer(x))
            acts.append(x)
        return acts

    def __call__(self, lum_t, lum_prev) -> Features:
        """``lum_t``/``lum_prev`` are (1, 1, H, W) luminance frames (arrays or tensors)."""
        x = concat([as_tensor(lum_t), as_tensor(lum_prev)], axis=0)
        acts = self.encode(x)
        xi = acts[-1]
        parts = []
        if self.use_correlation:
            swapped = xi[[1, 0]]
            parts.append(correlation(xi, swapped, self.max_disp))
        parts.append(self.conv(xi))
        z = concat(parts, axis=1) if len(parts) > 1 else parts[0]
        for layer in self.fin_layers:
            z = leaky_relu(layer(z))
        # skip connections: full resolution and half resolution
        return Features(z, [acts[0], acts[-2]])


class Decoder(Module):
    """Upsample-and-convolve decoder with two skip connections."""

    def __init__(self, in_ch: int, skip_ch: tuple[int, int], mid: tuple[int, int], out_ch: int, rng):
        self.up1 = Conv2d(in_ch + skip_ch[1], mid[0], 3, rng=rng)
        self.up2 = Conv2d(mid[0] + skip_ch[0], mid[1], 3, rng=rng)
        self.out = Conv2d(mid[1], out_ch, 3, zero_init=True)

    def __call__(self, z: Tensor, skip_half: Tensor, skip_full: Tensor) -> Tensor:
        x = upsample_nearest(z, 2)
        x = leaky_relu(self.up1(concat([x, skip_half], axis=1)))
        x = upsample_nearest(x, 2)
        x = leaky_relu(self.up2(concat([x, skip_full], axis=1)))
        return self.out(x)


def _swap_angular(x: Tensor) -> Tensor:
    # (A, C, B, H, W) <-> (B, C, A, H, W): the other angular axis becomes depth
    return x.transpose(2, 1, 0, 3, 4)


class OcclusionNet(Module):
    """3-D encoder-decoder producing a residual light field.

    One angular axis is the convolution depth and the other the batch; the
    two swap roles between layers so both are mixed. Only the spatial axes
    are strided, so every stage keeps the 9 angular samples.
    """

    def __init__(self, channels: int, cfg: NetworkConfig, rng):
        c1, c2, c3 = cfg.occ_channels
        cin = channels + 1
        s = (1, 2, 2)
        self.enc1 = Conv3d(cin, c1, 3, stride=s, padding=1, rng=rng)
        self.enc2 = Conv3d(c1, c2, 3, stride=s, padding=1, rng=rng)
        self.enc3 = Conv3d(c2, c3, 3, stride=s, padding=1, rng=rng)
        self.dec3 = Conv3d(c3 + c2, c2, 3, rng=rng)
        self.dec2 = Conv3d(c2 + c1, c1, 3, rng=rng)
        self.dec1 = Conv3d(c1 + cin, channels, 3, zero_init=True)
        self.trace: list[tuple] = []

    @staticmethod
    def _up(x: Tensor) -> Tensor:
        return upsample_nearest(x, 2, axes=(-2, -1))

    def __call__(self, lf: Tensor, mask: np.ndarray) -> Tensor:
        """``lf`` (81, C, H, W), ``mask`` (81, 1, H, W) -> residual (81, C, H, W)."""
        n, c, h, w = lf.shape
        x = concat([lf, Tensor(mask.astype(lf.dtype))], axis=1)
        # (u, v, C, H, W) -> (v, C, u, H, W): batch over v, depth over u
        x0 = x.reshape(ANGULAR_RES, ANGULAR_RES, c + 1, h, w).transpose(1, 2, 0, 3, 4)
        e1 = leaky_relu(self.enc1(x0))
        e1s = _swap_angular(e1)
        e2 = leaky_relu(self.enc2(e1s))
        e2s = _swap_angular(e2)
        e3 = leaky_relu(self.enc3(e2s))
        d3 = leaky_relu(self.dec3(_swap_angular(concat([self._up(e3), e2s], axis=1))))
        d2 = leaky_relu(self.dec2(_swap_angular(concat([self._up(d3), e1s], axis=1))))
        r = tanh(self.dec1(_swap_angular(concat([self._up(d2), x0], axis=1))))
        self.trace = [t.shape for t in (x0, e1, e2, e3, d3, d2, r)]
        r = _swap_angular(r)  # back to (v, C, u, H, W)
        return r.transpose(2, 0, 1, 3, 4).reshape(n, c, h, w)


class PerceptualNet:
    """Frozen, seeded three-stage convolutional feature stack."""

    def __init__(self, channels: int, dtype=np.float32):
        rng = np.random.default_rng(PERCEPTUAL_SEED)
        self.layers = []
        prev = channels
        for c in PERCEPTUAL_CHANNELS:
            layer = Conv2d(prev, c, 3, stride=2, padding=1, rng=rng, dtype=dtype)
            layer.weight.requires_grad = False
            layer.bias.requires_grad = False
            self.layers.append(layer)
            prev = c

    def __call__(self, img) -> Tensor:
        x = img
        for layer in self.layers:
            x = leaky_relu(layer(x))
        return x


class LightFieldNet(Module):
    """All trainable sub-networks."""

    def __init__(self, cfg: NetworkConfig, channels: int = 3):
        self.cfg = cfg
        self.channels = channels
        rng = np.random.default_rng(cfg.seed)
        self.features = FeatureExtractor(cfg, rng)
        skip = self.features.skip_channels
        dec = cfg.decoder_channels
        self.appearance = Decoder(cfg.fin_channels, skip, dec, 2 * N_VIEWS, rng)
        self.optical = Decoder(2 * cfg.fin_channels, skip, dec, 2, rng)
        self.occlusion = OcclusionNet(channels, cfg, rng)
        self.perceptual = PerceptualNet(channels)

    def groups(self) -> dict[str, list[Tensor]]:
        return {
            "features": self.features.parameters(),
            "appearance": self.appearance.parameters(),
            "optical": self.optical.parameters(),
            "occlusion": self.occlusion.parameters(),
        }

    # -- stages -------------------------------------------------------------
    def feature_extract(self, lum_t: np.ndarray, lum_prev: np.ndarray) -> Features:
        return self.features(lum_t, lum_prev)

    def appearance_flow_decode(self, feats: Features) -> Tensor:
        """Appearance flows (81, 2, H, W) for frame t, bounded by ``flow_cap``."""
        z = feats.zeta[0:1]
        raw = self.appearance(z, feats.skips[1][0:1], feats.skips[0][0:1])
        _, _, h, w = raw.shape
        flows = tanh(raw.reshape(N_VIEWS, 2, h, w)) * self.cfg.flow_cap
        return where(_CENTER, Tensor(np.zeros((1, 2, h, w), dtype=flows.dtype)), flows)

    def optical_flow_decode(self, feats: Features) -> tuple[Tensor, Tensor]:
        """``(O_fw, O_bw)``, each (1, 2, H, W).

        ``O_fw`` lives on frame t-1's grid and samples frame t; ``O_bw`` the
        reverse. Both come from one shared decoder with transposed inputs.
        """
        z = feats.zeta
        pair = concat([z[[1, 0]], z], axis=1)  # row 0: (zeta_prev, zeta_t); row 1: (zeta_t, zeta_prev)
        s_half = feats.skips[1][[1, 0]]
        s_full = feats.skips[0][[1, 0]]
        out = self.optical(pair, s_half, s_full)
        return out[0:1], out[1:2]

    def synth_initial(self, frame: np.ndarray, flows: Tensor) -> Tensor:
        """Warp the shifted center view with each appearance flow.

        ``frame`` is (C, H, W); returns the initial light field (81, C, H, W)
        with the center view pinned to ``frame``.
        """
        shifted = shifted_inputs(frame, self.cfg.eta)
        lf = warp_tensor(Tensor(shifted), flows)
        return where(_CENTER, Tensor(frame[None]), lf)

    def occlusion_mask(self, lf_init: Tensor) -> np.ndarray:
        """Per-view variance masks (81, 1, H, W) of the initial light field (no gradient)."""
        data = lf_init.data
        if data.shape[1] == 3:
            lum = np.tensordot(np.array([LUMA_R, LUMA_G, LUMA_B], dtype=data.dtype), data, axes=([0], [1]))
        else:
            lum = data[:, 0]
        var = lum.var(axis=0)[..., None]
        masks = variance_mask(var, self.cfg.mask_threshold, self.cfg.mask_percentile, self.cfg.eta)
        return masks.reshape(N_VIEWS, 1, *var.shape[:2]).astype(data.dtype)

    def occlusion_refine(self, lf_init: Tensor, mask: np.ndarray, frame: np.ndarray) -> tuple[Tensor, Tensor]:
        residual = self.occlusion(lf_init, mask)
        lf = (lf_init + residual).clip(0.0, 1.0)
        return where(_CENTER, Tensor(frame[None]), lf), residual


def shifted_inputs(frame: np.ndarray, eta: float) -> np.ndarray:
    """Input shifting for all 81 views: (C, H, W) -> (81, C, H, W)."""
    img = np.moveaxis(frame, 0, -1)
    out = np.stack([shift_input(img, (c.u, c.v), eta) for c in angular_grid()])
    return np.ascontiguousarray(np.moveaxis(out, -1, 1)).astype(frame.dtype, copy=False)


def luminance_nchw(frame: np.ndarray) -> np.ndarray:
    """(C, H, W) frame -> (1, 1, H, W) Rec.601 luminance."""
    if frame.shape[0] == 1:
        return frame[None].copy()
    w = np.array([LUMA_R, LUMA_G, LUMA_B], dtype=frame.dtype)
    return np.tensordot(w, frame, axes=([0], [0]))[None, None].astype(frame.dtype)
