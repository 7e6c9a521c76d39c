"""Margin-based alignment between the sentence vector and pooled table cells.

The hinge pulls ``h_cls`` toward the mean of its own table (positive) and
pushes it away from the pooled tables of other sentences in the batch
(negatives): ``max(0, m + d(h_cls, h_pos) - d(h_cls, h_neg))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .encoder import glorot
from .errors import ConfigError, DimensionError
from .tensor import ParamStore, Tensor


@dataclass(frozen=True)
class ContrastiveConfig:
    margin: float = 1.0
    enabled: bool = True
    d_table: int = 64
    d_model: int = 64

    def __post_init__(self):
        if self.margin <= 0:
            raise ConfigError("contrastive margin must be positive")

    @property
    def needs_projection(self) -> bool:
        return self.d_table != self.d_model


def init_contrastive(params: ParamStore, cfg: ContrastiveConfig, rng: np.random.Generator,
                     prefix: str = "contrastive") -> None:
    if cfg.needs_projection:
        params.add(f"{prefix}.proj.weight", glorot(rng, cfg.d_table, cfg.d_model))
        params.add(f"{prefix}.proj.bias", np.zeros(cfg.d_model))


def pool_positive(table: Tensor) -> Tensor:
    """Mean over all ``n * n`` cells."""
    n = table.shape[0]
    return table.reshape(n * n, table.shape[-1]).mean(axis=0)


def project(h: Tensor, params: ParamStore, cfg: ContrastiveConfig, prefix: str = "contrastive") -> Tensor:
    if not cfg.needs_projection:
        return h
    return T.affine(h, params[f"{prefix}.proj.weight"], params[f"{prefix}.proj.bias"])


def batch_negatives(batch: Sequence[Tensor], index: int) -> list[Tensor]:
    if not 0 <= index < len(batch):
        raise IndexError(f"index {index} outside batch of size {len(batch)}")
    return [h for i, h in enumerate(batch) if i != index]


def contrastive_loss(h_cls: Tensor, h_pos: Tensor, negatives: Sequence[Tensor], margin: float = 1.0) -> Tensor:
    """Mean hinge over the negatives; zero when there are none."""
    if not negatives:
        return Tensor(0.0)
    for h in (h_pos, *negatives):
        if h.shape != h_cls.shape:
            raise DimensionError(f"contrastive vectors differ in shape: {h_cls.shape} vs {h.shape}")
    d_pos = T.euclidean_distance(h_cls, h_pos)
    total = None
    for h_neg in negatives:
        hinge = T.relu(d_pos - T.euclidean_distance(h_cls, h_neg) + margin)
        total = hinge if total is None else total + hinge
    return total * (1.0 / len(negatives))
