"""Flat ``key = value`` run configuration shared by the library and the CLI."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .contrastive import ContrastiveConfig
from .encoder import EncoderConfig
from .errors import ConfigError
from .mmcnn import MmcnnConfig
from .region import RegionConfig
from .relation_table import TableConfig


@dataclass
class RunConfig:
    # encoder
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    max_len: int = 100
    dropout: float = 0.1
    min_freq: int = 1
    # relation table
    d_table: int = 64
    n_slices: int = 32
    # convolution stack
    mmcnn_blocks: int = 2
    # contrastive alignment
    margin: float = 1.0
    ccl_enabled: bool = True
    # regions and decoding
    tau_s: float = 0.5
    tau_e: float = 0.5
    max_span: int = 8
    neg_ratio: int = 3
    neg_cap: int = 50
    # optimisation
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float = 1e-3
    clip_norm: float = 5.0
    seed: int = 0
    # files
    train: str = ""
    valid: str = ""
    test: str = ""
    checkpoint: str = ""
    output: str = ""

    PATH_KEYS = ("train", "valid", "test", "checkpoint", "output")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.clip_norm <= 0:
            raise ConfigError("clip_norm must be positive")
        if self.min_freq < 1:
            raise ConfigError("min_freq must be >= 1")
        # sub-config constructors carry the remaining checks
        self.encoder(vocab_size=1)
        self.table()
        self.mmcnn()
        self.contrastive()
        self.region()

    # -- component views -------------------------------------------------
    def encoder(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(vocab_size, self.d_model, self.n_layers, self.n_heads, self.d_ff,
                             self.max_len, self.dropout)

    def table(self) -> TableConfig:
        return TableConfig(self.d_model, self.d_table, self.n_slices)

    def mmcnn(self) -> MmcnnConfig:
        return MmcnnConfig(n_blocks=self.mmcnn_blocks, channels=self.d_table)

    def contrastive(self) -> ContrastiveConfig:
        return ContrastiveConfig(self.margin, self.ccl_enabled, self.d_table, self.d_model)

    def region(self) -> RegionConfig:
        return RegionConfig(self.d_table, self.tau_s, self.tau_e, self.max_span,
                            self.neg_ratio, self.neg_cap)

    # -- serialisation ---------------------------------------------------
    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, str]:
        return {f.name: _format(getattr(self, f.name)) for f in fields(self)}

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())

    @classmethod
    def from_dict(cls, values: dict[str, str]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw, known[key].type)
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_dict(parse_key_values(text))

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = cls.from_text(text)
        base = Path(path).parent
        # relative data paths resolve against the config file's directory
        for key in cls.PATH_KEYS:
            value = getattr(cfg, key)
            if value and not Path(value).is_absolute():
                setattr(cfg, key, str(base / value))
        return cfg


def parse_key_values(text: str, comments: bool = True) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = (raw.split("#", 1)[0] if comments else raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(key: str, raw: str, typ):
    typ = typ if isinstance(typ, str) else typ.__name__
    try:
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ}") from None
    return raw
