"""Binary checkpoints.

Layout (all integers little-endian)::

    b"SCN1"
    u32 config length, config as UTF-8 JSON (sorted keys)
    u32 parameter count
    per parameter, in build order:
        u16 name length, UTF-8 name
        u8 rank, rank x u32 dims
        float64 values, row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .models import ConfigError, Model, ModelConfig, build_model

MAGIC = b"SCN1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: Model, path) -> None:
    cfg = json.dumps(model.config.to_dict(), sort_keys=True).encode("utf-8")
    params = model.parameters()
    chunks = [MAGIC, struct.pack("<I", len(cfg)), cfg, struct.pack("<I", len(params))]
    for p in params:
        name = p.name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name)))
        chunks.append(name)
        chunks.append(struct.pack(f"<B{p.data.ndim}I", p.data.ndim, *p.shape))
        chunks.append(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"{self.path}: truncated at byte {self.pos} (needed {n} more)")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint(path) -> tuple[ModelConfig, list[tuple[str, np.ndarray]]]:
    r = _Reader(Path(path).read_bytes(), path)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic bytes)")
    (cfg_len,) = r.unpack("<I")
    try:
        config = ModelConfig.from_dict(json.loads(r.take(cfg_len).decode("utf-8")))
    except (ValueError, TypeError) as exc:
        raise CheckpointError(f"{path}: unreadable config block ({exc})") from None
    (count,) = r.unpack("<I")
    tensors = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("<B")
        shape = r.unpack(f"<{rank}I")
        n = int(np.prod(shape))
        data = np.frombuffer(r.take(8 * n), dtype="<f8").reshape(shape).astype(np.float64)
        tensors.append((name, data))
    if r.pos != len(r.buf):
        raise CheckpointError(f"{path}: {len(r.buf) - r.pos} trailing bytes")
    return config, tensors


def load_checkpoint(model: Model, path) -> Model:
    """Copy checkpointed parameters into ``model``; configs and shapes must match."""
    config, tensors = read_checkpoint(path)
    if config != model.config:
        diff = {k: (v, model.config.to_dict()[k]) for k, v in config.to_dict().items()
                if model.config.to_dict()[k] != v}
        raise ConfigError(f"{path}: checkpoint config differs from model (checkpoint, model): {diff}")
    params = model.parameters()
    if len(params) != len(tensors):
        raise CheckpointError(f"{path}: {len(tensors)} tensors, model has {len(params)}")
    for p, (name, data) in zip(params, tensors):
        if name != p.name or data.shape != p.shape:
            raise CheckpointError(f"{path}: tensor {name} {data.shape} does not match {p.name} {p.shape}")
    for p, (_, data) in zip(params, tensors):
        p.data = data
    return model


def load_model(path) -> Model:
    config, _ = read_checkpoint(path)
    return load_checkpoint(build_model(config, seed=None), path)
