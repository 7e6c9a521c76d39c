"""Small trainable transformer encoder producing word states and a sentence vector."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .data import CLS_ID
from .errors import ConfigError, LengthError
from .tensor import ParamStore, Tensor


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    max_len: int = 100
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_len"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_encoder(params: ParamStore, cfg: EncoderConfig, rng: np.random.Generator,
                 prefix: str = "encoder") -> None:
    d = cfg.d_model
    params.add(f"{prefix}.tok_embed", rng.normal(0.0, 0.1, size=(cfg.vocab_size, d)))
    # +1 position for the prepended sentence sentinel
    params.add(f"{prefix}.pos_embed", rng.normal(0.0, 0.1, size=(cfg.max_len + 1, d)))
    for layer in range(cfg.n_layers):
        p = f"{prefix}.layer{layer}"
        for ln in ("ln1", "ln2"):
            params.add(f"{p}.{ln}.gain", np.ones(d))
            params.add(f"{p}.{ln}.bias", np.zeros(d))
        for proj in ("q", "k", "v", "o"):
            params.add(f"{p}.attn.{proj}.weight", glorot(rng, d, d))
            params.add(f"{p}.attn.{proj}.bias", np.zeros(d))
        params.add(f"{p}.ff1.weight", glorot(rng, d, cfg.d_ff))
        params.add(f"{p}.ff1.bias", np.zeros(cfg.d_ff))
        params.add(f"{p}.ff2.weight", glorot(rng, cfg.d_ff, d))
        params.add(f"{p}.ff2.bias", np.zeros(d))
    params.add(f"{prefix}.ln_final.gain", np.ones(d))
    params.add(f"{prefix}.ln_final.bias", np.zeros(d))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered / T.sqrt(var + eps) * gain + bias


def self_attention(x: Tensor, params: ParamStore, prefix: str, n_heads: int) -> Tensor:
    n, d = x.shape
    dk = d // n_heads

    def heads(name):
        y = T.affine(x, params[f"{prefix}.{name}.weight"], params[f"{prefix}.{name}.bias"])
        return y.reshape(n, n_heads, dk).transpose(1, 0, 2)

    q, k, v = heads("q"), heads("k"), heads("v")
    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / math.sqrt(dk))
    mixed = T.softmax(scores, axis=-1) @ v
    merged = mixed.transpose(1, 0, 2).reshape(n, d)
    return T.affine(merged, params[f"{prefix}.o.weight"], params[f"{prefix}.o.bias"])


def encode(ids, params: ParamStore, cfg: EncoderConfig, training: bool = False,
           rng: np.random.Generator | None = None, prefix: str = "encoder") -> tuple[Tensor, Tensor]:
    """Return ``(H [n, d_model], h_cls [d_model])`` for a sentence of token ids.

    A sentinel id is prepended; its final state is the sentence vector and is
    excluded from ``H``.
    """
    n = len(ids)
    if n < 1:
        raise LengthError("cannot encode an empty sentence")
    if n > cfg.max_len:
        raise LengthError(f"sentence has {n} tokens, limit is {cfg.max_len}")
    full = np.asarray([CLS_ID, *ids], dtype=np.int64)
    if full.max() >= cfg.vocab_size or full.min() < 0:
        raise ValueError("token id outside the vocabulary")
    x = params[f"{prefix}.tok_embed"][full] + params[f"{prefix}.pos_embed"][: n + 1]
    x = T.dropout(x, cfg.dropout, rng, training)
    for layer in range(cfg.n_layers):
        p = f"{prefix}.layer{layer}"
        h = layer_norm(x, params[f"{p}.ln1.gain"], params[f"{p}.ln1.bias"])
        x = x + T.dropout(self_attention(h, params, f"{p}.attn", cfg.n_heads), cfg.dropout, rng, training)
        h = layer_norm(x, params[f"{p}.ln2.gain"], params[f"{p}.ln2.bias"])
        h = T.relu(T.affine(h, params[f"{p}.ff1.weight"], params[f"{p}.ff1.bias"]))
        h = T.affine(h, params[f"{p}.ff2.weight"], params[f"{p}.ff2.bias"])
        x = x + T.dropout(h, cfg.dropout, rng, training)
    x = layer_norm(x, params[f"{prefix}.ln_final.gain"], params[f"{prefix}.ln_final.bias"])
    return x[1:], x[0]
