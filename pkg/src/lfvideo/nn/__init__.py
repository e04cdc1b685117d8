"""Minimal reverse-mode autodiff and neural-network operators."""

from .checkpoint import load_checkpoint, save_checkpoint
from .functional import conv2d, conv3d, correlation, l1, masked_l1, pad_edge
from .layers import LEAKY_SLOPE, Conv2d, Conv3d, Module
from .optim import Adam, AdamState, adam_step
from .tensor import (
    NonFiniteError,
    Tensor,
    as_tensor,
    concat,
    is_grad_enabled,
    leaky_relu,
    no_grad,
    tanh,
    upsample_nearest,
    where,
)

__all__ = [
    "Adam",
    "AdamState",
    "Conv2d",
    "Conv3d",
    "LEAKY_SLOPE",
    "Module",
    "NonFiniteError",
    "Tensor",
    "adam_step",
    "as_tensor",
    "concat",
    "conv2d",
    "conv3d",
    "correlation",
    "is_grad_enabled",
    "l1",
    "leaky_relu",
    "load_checkpoint",
    "masked_l1",
    "no_grad",
    "pad_edge",
    "save_checkpoint",
    "tanh",
    "upsample_nearest",
    "where",
]
