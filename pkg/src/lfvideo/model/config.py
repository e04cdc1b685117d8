"""Network and training configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path


@dataclass
class NetworkConfig:
    """Architecture, loss weights and schedule.

    Defaults are desk-scale: 64 px crops and a 2K-iteration warmup instead of
    224 px and 50K.
    """

    base_channels: int = 16
    encoder_depth: int = 4
    fin_channels: int = 128
    decoder_channels: tuple[int, int] = (32, 16)
    occ_channels: tuple[int, int, int] = (8, 16, 32)
    max_disp: int = 4
    use_correlation: bool = True
    eta: float = 1.0
    flow_cap: float = 5.0
    mask_percentile: float = 90.0
    mask_threshold: float | None = None
    valid_tol: float = 1.0
    smooth_weight: float = 0.1
    w_global: float = 1.0
    w_local: float = 1.0
    w_occ: float = 1.0
    w_percep: float = 0.1
    w_temp: float = 0.5
    w_flow: float = 1.0
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    warmup_iters: int = 2000
    total_iters: int = 10000
    crop: int = 64
    monitor_every: int = 10
    seed: int = 0

    def __post_init__(self):
        self.decoder_channels = tuple(int(c) for c in self.decoder_channels)
        self.occ_channels = tuple(int(c) for c in self.occ_channels)
        self.validate()

    def validate(self) -> None:
        for name in ("w_global", "w_local", "w_occ", "w_percep", "w_temp", "w_flow", "smooth_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.warmup_iters > self.total_iters:
            raise ValueError("warmup_iters must not exceed total_iters")
        if self.warmup_iters < 0:
            raise ValueError("warmup_iters must be >= 0")
        if self.crop < 16:
            raise ValueError("crop must be >= 16")
        if self.encoder_depth < 2 or self.encoder_depth % 2:
            raise ValueError("encoder_depth must be an even number >= 2")
        if len(self.decoder_channels) != 2 or len(self.occ_channels) != 3:
            raise ValueError("decoder_channels needs 2 entries, occ_channels 3")
        if self.max_disp < 0:
            raise ValueError("max_disp must be >= 0")
        if self.monitor_every < 0:
            raise ValueError("monitor_every must be >= 0")
        if self.flow_cap <= 0:
            raise ValueError("flow_cap must be > 0")

    @property
    def feature_stride(self) -> int:
        return 2 ** (self.encoder_depth // 2)

    @property
    def size_multiple(self) -> int:
        """Spatial sizes the network handles without padding."""
        return max(self.feature_stride, 8)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decoder_channels"] = list(self.decoder_channels)
        d["occ_channels"] = list(self.occ_channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "NetworkConfig":
        """Load a JSON object, or flat ``key = value`` lines (TOML subset)."""
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = _parse_kv(text)
        return cls.from_dict(data)


def _parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            lowered = val.lower()
            if lowered in ("true", "false"):
                out[key] = lowered == "true"
            else:
                out[key] = val.strip("\"'")
    return out
