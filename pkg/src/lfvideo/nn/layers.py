"""Parameter containers built on the tensor tape."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .functional import conv2d, conv3d
from .tensor import Tensor

LEAKY_SLOPE = 0.2


class Module:
    """Base class that discovers parameters among its attributes.

    Parameters are :class:`Tensor` attributes with ``requires_grad`` set;
    sub-modules may be held directly or in lists. Discovery follows attribute
    insertion order, so names and ordering are stable across runs.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        seen: set[int] = set()
        for key, val in vars(self).items():
            yield from self._walk(f"{prefix}{key}", val, seen)

    @staticmethod
    def _walk(name, val, seen):
        if isinstance(val, Tensor):
            if val.requires_grad and id(val) not in seen:
                seen.add(id(val))
                yield name, val
        elif isinstance(val, Module):
            for sub_name, p in val.named_parameters(prefix=name + "."):
                if id(p) not in seen:
                    seen.add(id(p))
                    yield sub_name, p
        elif isinstance(val, (list, tuple)):
            for i, item in enumerate(val):
                yield from Module._walk(f"{name}.{i}", item, seen)

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for name, p in params.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise ValueError(f"{name}: shape {arr.shape} does not match {p.shape}")
            p.data = arr.astype(p.dtype, copy=True)


def kaiming_uniform(shape: tuple, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    gain = np.sqrt(2.0 / (1.0 + LEAKY_SLOPE**2))
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class _ConvLayer(Module):
    ndim = 2

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        kernel_size=3,
        stride=1,
        padding=None,
        rng: np.random.Generator | None = None,
        zero_init: bool = False,
        dtype=np.float32,
    ):
        k = (kernel_size,) * self.ndim if np.isscalar(kernel_size) else tuple(kernel_size)
        if padding is None:
            if any(i % 2 == 0 for i in k):
                raise ValueError("same padding needs odd kernel extents")
            padding = tuple(i // 2 for i in k)
        shape = (out_ch, in_ch) + k
        if zero_init:
            w = np.zeros(shape, dtype=dtype)
        else:
            w = kaiming_uniform(shape, rng if rng is not None else np.random.default_rng(0), dtype)
        self.weight = Tensor(w, requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True)
        self.stride = stride
        self.padding = padding


class Conv2d(_ConvLayer):
    """2-D convolution layer; same padding by default."""

    ndim = 2

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, self.stride, self.padding)


class Conv3d(_ConvLayer):
    """3-D convolution layer over (depth, height, width)."""

    ndim = 3

    def __call__(self, x: Tensor) -> Tensor:
        return conv3d(x, self.weight, self.bias, self.stride, self.padding)
