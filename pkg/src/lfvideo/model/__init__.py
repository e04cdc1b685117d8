"""Light-field video synthesis network, losses and training."""

from .config import NetworkConfig
from .losses import lf_terms, loss_flow, loss_lf, loss_occ, loss_percep, loss_temp, smoothness
from .network import LightFieldNet
from .pipeline import (
    SynthesisOutput,
    forward_pair,
    replicate_center,
    synthesize_frame,
    synthesize_video,
)
from .train import TrainResult, load_model, read_loss_log, save_model, train, write_loss_log

__all__ = [
    "LightFieldNet",
    "NetworkConfig",
    "SynthesisOutput",
    "TrainResult",
    "forward_pair",
    "lf_terms",
    "load_model",
    "loss_flow",
    "loss_lf",
    "loss_occ",
    "loss_percep",
    "loss_temp",
    "read_loss_log",
    "replicate_center",
    "save_model",
    "smoothness",
    "synthesize_frame",
    "synthesize_video",
    "train",
    "write_loss_log",
]
