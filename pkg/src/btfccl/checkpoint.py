"""Binary checkpoint format.

Layout (all integers little-endian u32)::

    b"BTF1" | version | meta_len | meta (UTF-8 ``key = value`` lines) | n_params
    then per parameter: path_len | path | rank | dims... | float32 payload

The metadata block holds the full run configuration plus ``best_epoch``,
``best_valid_f1`` and ``vocab`` (space-separated non-reserved words).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_key_values
from .errors import CheckpointError, ConfigError

MAGIC = b"BTF1"
VERSION = 1
_META_KEYS = ("best_epoch", "best_valid_f1", "vocab")


@dataclass
class Checkpoint:
    config: RunConfig
    params: dict[str, np.ndarray]
    vocab: list[str] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_f1: float = 0.0
    version: int = VERSION

    def metadata_text(self) -> str:
        lines = [self.config.to_text()]
        lines.append(f"best_epoch = {self.best_epoch}\n")
        lines.append(f"best_valid_f1 = {self.best_valid_f1!r}\n")
        lines.append(f"vocab = {' '.join(self.vocab)}\n")
        return "".join(lines)


def _u32(value: int) -> bytes:
    return struct.pack("<I", value)


def to_bytes(ckpt: Checkpoint) -> bytes:
    meta = ckpt.metadata_text().encode("utf-8")
    parts = [MAGIC, _u32(ckpt.version), _u32(len(meta)), meta, _u32(len(ckpt.params))]
    for path in sorted(ckpt.params):
        arr = np.asarray(ckpt.params[path], dtype="<f4")
        name = path.encode("utf-8")
        parts += [_u32(len(name)), name, _u32(arr.ndim)]
        parts += [_u32(dim) for dim in arr.shape]
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError("truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def from_bytes(blob: bytes) -> Checkpoint:
    reader = _Reader(blob)
    if reader.take(4) != MAGIC:
        raise CheckpointError("bad magic")
    version = reader.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    try:
        meta = parse_key_values(reader.take(reader.u32()).decode("utf-8"), comments=False)
        extra = {k: meta.pop(k) for k in _META_KEYS if k in meta}
        config = RunConfig.from_dict(meta)
    except (UnicodeDecodeError, ConfigError) as exc:
        raise CheckpointError(f"corrupt checkpoint metadata: {exc}") from None
    params = {}
    for _ in range(reader.u32()):
        path = reader.take(reader.u32()).decode("utf-8")
        rank = reader.u32()
        shape = tuple(reader.u32() for _ in range(rank))
        count = int(np.prod(shape)) if shape else 1
        payload = reader.take(4 * count)
        params[path] = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(shape)
    if reader.pos != len(blob):
        raise CheckpointError("trailing bytes after parameter records")
    return Checkpoint(
        config=config,
        params=params,
        vocab=extra.get("vocab", "").split(),
        best_epoch=int(extra.get("best_epoch", 0)),
        best_valid_f1=float(extra.get("best_valid_f1", 0.0)),
        version=version,
    )


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(to_bytes(ckpt))


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    return from_bytes(blob)
