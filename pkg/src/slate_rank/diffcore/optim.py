"""Adaptive-moment (Adam) parameter updates."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError
from .tensor import Tensor


class AdamState:
    """First/second moment estimates plus the shared step counter.

    Moments are allocated lazily per parameter name, as zeros, so a
    parameter that never receives gradient contributes nothing.
    """

    def __init__(self):
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t: int = 0


def adam_step(
    params: dict[str, Tensor],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update over named parameters.

    Reads each parameter's ``grad`` slot (a missing grad counts as zero,
    which leaves the parameter untouched). NaN gradients abort the step
    before any parameter is mutated.
    """
    for name, p in params.items():
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue  # zero gradient: moments stay zero, value unchanged
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            state.m[name] = m
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


class Adam:
    """Stateful convenience wrapper around :func:`adam_step`."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState()

    def step(self, params: dict[str, Tensor]) -> None:
        adam_step(params, self.state, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self, params: dict[str, Tensor]) -> None:
        for p in params.values():
            p.grad = None
