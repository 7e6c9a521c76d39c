"""Adam with global gradient-norm clipping."""

from __future__ import annotations

import numpy as np

from .tensor import ParamStore


def clip_grad_norm(params: ParamStore, max_norm: float) -> float:
    total = float(np.sqrt(sum(float((t.grad.astype(np.float64) ** 2).sum()) for _, t in params.items())))
    if total > max_norm:
        factor = max_norm / (total + 1e-12)
        for _, t in params.items():
            t.grad = t.grad * np.asarray(factor, dtype=t.grad.dtype)
    return total


class Adam:
    def __init__(self, params: ParamStore, lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {path: np.zeros_like(t.data) for path, t in params.items()}
        self.v = {path: np.zeros_like(t.data) for path, t in params.items()}

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for path, p in self.params.items():
            g = p.grad
            m, v = self.m[path], self.v[path]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (self.lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)
            p.data = (p.data - update).astype(p.data.dtype)
