"""Initial word-pair relation table.

Each cell concatenates both word states, a max-pooled context vector over the
span between them and a bilinear interaction vector, then applies one shared
affine map followed by ReLU.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoder import glorot
from .errors import ConfigError
from .tensor import ParamStore, Tensor


@dataclass(frozen=True)
class TableConfig:
    d_model: int = 64
    d_table: int = 64
    n_slices: int = 32

    def __post_init__(self):
        if min(self.d_model, self.d_table, self.n_slices) <= 0:
            raise ConfigError("table dimensions must be positive")


def init_table(params: ParamStore, cfg: TableConfig, rng: np.random.Generator,
               prefix: str = "table") -> None:
    d = cfg.d_model
    params.add(f"{prefix}.bilinear", rng.normal(0.0, 1.0 / d, size=(cfg.n_slices, d, d)))
    params.add(f"{prefix}.linear.weight", glorot(rng, 3 * d + cfg.n_slices, cfg.d_table))
    params.add(f"{prefix}.linear.bias", np.zeros(cfg.d_table))


def context_pool(H: Tensor, i: int, j: int) -> Tensor:
    """Elementwise max over rows ``min(i, j) .. max(i, j)`` of ``H``."""
    n = H.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"pair ({i}, {j}) outside sentence of length {n}")
    lo, hi = min(i, j), max(i, j)
    return T.reduce_max_pool(H[lo:hi + 1], axis=0)


def tensor_interaction(h_i: Tensor, h_j: Tensor, W: Tensor) -> Tensor:
    """``t[k] = h_i^T W[k] h_j`` for every slice ``k``."""
    K, d, _ = W.shape
    left = (h_i.reshape(1, d) @ W.transpose(1, 0, 2).reshape(d, K * d)).reshape(K, d)
    return (left @ h_j.reshape(d, 1)).reshape(K)


def pairwise_interaction(H: Tensor, W: Tensor) -> Tensor:
    """All-pairs bilinear interactions, shape ``[n, n, K]``."""
    n, d = H.shape
    K = W.shape[0]
    left = (H @ W.transpose(1, 0, 2).reshape(d, K * d)).reshape(n * K, d)
    return (left @ H.transpose()).reshape(n, K, n).transpose(0, 2, 1)


def build_table(H: Tensor, params: ParamStore, prefix: str = "table") -> Tensor:
    """Relation table ``[n, n, d_table]`` from word states ``H [n, d]``."""
    n, d = H.shape
    h_row = T.broadcast_to(H.reshape(n, 1, d), (n, n, d))
    h_col = T.broadcast_to(H.reshape(1, n, d), (n, n, d))
    context = T.pairwise_span_max(H)
    inter = pairwise_interaction(H, params[f"{prefix}.bilinear"])
    features = T.concat([h_row, h_col, context, inter], axis=-1)
    return T.relu(T.affine(features, params[f"{prefix}.linear.weight"], params[f"{prefix}.linear.bias"]))
