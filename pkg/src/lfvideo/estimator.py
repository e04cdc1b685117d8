"""scikit-learn style wrapper around training and synthesis."""

from __future__ import annotations

from dataclasses import fields

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import LightFieldVideo
from .evaluate import evaluate_video
from .model.config import NetworkConfig
from .model.pipeline import synthesize_video
from .model.train import train


def check_frames(frames, channels: int | None = None) -> np.ndarray:
    """Validate a (T, H, W, C) monocular clip and return it as float32."""
    arr = np.asarray(frames)
    if arr.ndim == 3:
        arr = arr[..., None]
    if arr.ndim != 4:
        raise ValueError(f"frames must be (T, H, W, C), got shape {arr.shape}")
    if len(arr) == 0:
        raise ValueError("frames must contain at least one frame")
    if channels is not None and arr.shape[-1] != channels:
        raise ValueError(f"expected {channels} channels, got {arr.shape[-1]}")
    arr = arr.astype(np.float32, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError("frames contain non-finite values")
    return arr


def check_videos(videos) -> list[LightFieldVideo]:
    if isinstance(videos, LightFieldVideo):
        videos = [videos]
    videos = list(videos)
    if not videos:
        raise ValueError("need at least one training video")
    for v in videos:
        if not isinstance(v, LightFieldVideo):
            raise TypeError(f"expected LightFieldVideo, got {type(v).__name__}")
    return videos


class LightFieldSynthesizer(BaseEstimator):
    """Learn to synthesize 9x9 light-field videos from monocular clips.

    ``fit`` trains on light-field videos with ground truth; ``predict`` maps a
    (T, H, W, C) clip to a :class:`LightFieldVideo`. Parameters mirror
    :class:`NetworkConfig`.

    Examples
    --------
    >>> est = LightFieldSynthesizer(total_iters=10, warmup_iters=5, crop=16)
    >>> est.fit(make_dataset(1))            # doctest: +SKIP
    >>> lf = est.predict(frames)            # doctest: +SKIP
    """

    def __init__(
        self,
        base_channels=16,
        encoder_depth=4,
        fin_channels=128,
        decoder_channels=(32, 16),
        occ_channels=(8, 16, 32),
        max_disp=4,
        use_correlation=True,
        eta=1.0,
        flow_cap=5.0,
        mask_percentile=90.0,
        mask_threshold=None,
        valid_tol=1.0,
        smooth_weight=0.1,
        w_global=1.0,
        w_local=1.0,
        w_occ=1.0,
        w_percep=0.1,
        w_temp=0.5,
        w_flow=1.0,
        lr=2e-4,
        beta1=0.9,
        beta2=0.999,
        warmup_iters=2000,
        total_iters=10000,
        crop=64,
        monitor_every=10,
        seed=0,
    ):
        self.base_channels = base_channels
        self.encoder_depth = encoder_depth
        self.fin_channels = fin_channels
        self.decoder_channels = decoder_channels
        self.occ_channels = occ_channels
        self.max_disp = max_disp
        self.use_correlation = use_correlation
        self.eta = eta
        self.flow_cap = flow_cap
        self.mask_percentile = mask_percentile
        self.mask_threshold = mask_threshold
        self.valid_tol = valid_tol
        self.smooth_weight = smooth_weight
        self.w_global = w_global
        self.w_local = w_local
        self.w_occ = w_occ
        self.w_percep = w_percep
        self.w_temp = w_temp
        self.w_flow = w_flow
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.warmup_iters = warmup_iters
        self.total_iters = total_iters
        self.crop = crop
        self.monitor_every = monitor_every
        self.seed = seed

    def to_config(self) -> NetworkConfig:
        return NetworkConfig(**{f.name: getattr(self, f.name) for f in fields(NetworkConfig)})

    def fit(self, videos, y=None):
        """Train on one or more ground-truth light-field videos."""
        videos = check_videos(videos)
        result = train(videos, self.to_config())
        self.net_ = result.net
        self.loss_log_ = result.log
        self.dropped_terms_ = dict(result.dropped)
        self.n_channels_ = result.net.channels
        return self

    def predict(self, frames) -> LightFieldVideo:
        """Synthesize one light-field frame per input frame."""
        check_is_fitted(self, "net_")
        return synthesize_video(self.net_, check_frames(frames, self.n_channels_))

    def score(self, videos, y=None) -> float:
        """Mean light-field PSNR (dB) when synthesizing from each video's center views."""
        check_is_fitted(self, "net_")
        values = []
        for v in check_videos(videos):
            frames = np.stack([f.center for f in v.frames])
            values.append(evaluate_video(self.predict(frames), v).psnr)
        return float(np.mean(values))


__all__ = ["LightFieldSynthesizer", "check_frames", "check_videos"]
