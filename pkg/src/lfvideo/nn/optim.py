"""Adam optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    t: int,
    lr: float = 2e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> list[np.ndarray]:
    """Return Adam-updated copies of ``params``; ``state`` is updated in place.

    ``t`` is the 1-based step count used for bias correction.
    """
    if t < 1:
        raise ValueError("step count t must be >= 1")
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    out = []
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or state.m[i].shape != p.shape:
            raise ValueError(f"shape mismatch at parameter {i}: {p.shape} vs {g.shape}")
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        out.append((p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype))
    return out


class Adam:
    """Adam over a fixed list of :class:`Tensor` parameters.

    Parameters without a gradient after ``backward`` are treated as having a
    zero gradient, so frozen sub-networks simply receive no updates when they
    are left out of ``params``.
    """

    def __init__(self, params: list[Tensor], lr: float = 2e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        ids = [id(p) for p in params]
        if len(set(ids)) != len(ids):
            raise ValueError("parameter registered more than once")
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.t = 0
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        new = adam_step(
            [p.data for p in self.params], grads, self.state, self.t,
            lr=self.lr, beta1=self.betas[0], beta2=self.betas[1], eps=self.eps,
        )
        for p, d in zip(self.params, new):
            p.data = d
