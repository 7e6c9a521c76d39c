"""Multi-scale, multi-granularity residual convolutions over the relation table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError
from .tensor import ParamStore, Tensor


@dataclass(frozen=True)
class MmcnnConfig:
    n_blocks: int = 2
    channels: int = 64
    kernel_sizes: tuple[int, ...] = (3, 5)
    dilations: tuple[int, ...] = (1, 2, 3)
    init_scale: float = 1e-2

    def __post_init__(self):
        if self.n_blocks < 0:
            raise ConfigError("n_blocks must be >= 0")
        if any(k % 2 == 0 or k < 1 for k in self.kernel_sizes):
            raise ConfigError(f"kernel sizes must be odd, got {self.kernel_sizes}")
        if any(d < 1 for d in self.dilations):
            raise ConfigError(f"dilations must be positive, got {self.dilations}")

    def branches(self):
        return [(k, d) for k in self.kernel_sizes for d in self.dilations]

    def receptive_radius(self) -> int:
        """Largest cell offset one block can see."""
        return max(d * (k - 1) // 2 for k, d in self.branches())


def _conv_params(params, path, k, c, rng, scale):
    params.add(f"{path}.weight", rng.normal(0.0, scale, size=(k, k, c, c)))
    params.add(f"{path}.bias", np.zeros(c))


def init_mmcnn(params: ParamStore, cfg: MmcnnConfig, rng: np.random.Generator,
               prefix: str = "mmcnn") -> None:
    c = cfg.channels
    for block in range(cfg.n_blocks):
        p = f"{prefix}.block{block}"
        _conv_params(params, f"{p}.conv_in", 1, c, rng, cfg.init_scale)
        for k, d in cfg.branches():
            _conv_params(params, f"{p}.k{k}_d{d}", k, c, rng, cfg.init_scale)
        _conv_params(params, f"{p}.conv_out", 1, c, rng, cfg.init_scale)


def conv(x: Tensor, params: ParamStore, path: str, dilation: int = 1) -> Tensor:
    return T.conv2d_dilated(x, params[f"{path}.weight"], dilation) + params[f"{path}.bias"]


def mmcnn_block(table: Tensor, params: ParamStore, cfg: MmcnnConfig, block: int,
                prefix: str = "mmcnn") -> Tensor:
    if table.ndim != 3 or table.shape[0] != table.shape[1]:
        raise DimensionError(f"relation table must be [n, n, c], got {table.shape}")
    if table.shape[2] != cfg.channels:
        raise ConfigError(f"table has {table.shape[2]} channels, block expects {cfg.channels}")
    p = f"{prefix}.block{block}"
    reduced = T.relu(conv(table, params, f"{p}.conv_in"))
    merged = None
    for k in cfg.kernel_sizes:
        # per-dilation branches are summed after their own ReLU
        scale = None
        for d in cfg.dilations:
            branch = T.relu(conv(reduced, params, f"{p}.k{k}_d{d}", d))
            scale = branch if scale is None else scale + branch
        merged = scale if merged is None else merged + scale
    out = T.relu(conv(merged, params, f"{p}.conv_out"))
    return out + table


def mmcnn_stack(table: Tensor, params: ParamStore, cfg: MmcnnConfig, n_blocks: int | None = None,
                prefix: str = "mmcnn") -> Tensor:
    n_blocks = cfg.n_blocks if n_blocks is None else n_blocks
    if n_blocks < 0:
        raise ConfigError("n_blocks must be >= 0")
    for block in range(n_blocks):
        table = mmcnn_block(table, params, cfg, block, prefix)
    return table
