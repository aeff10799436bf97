"""Binary checkpoint format.

Layout: magic ``OVHR``, format version (u32 LE), then one block per tensor:
name length (u32 LE), name bytes (UTF-8), rank (u64 LE), extents (rank x u64
LE), data (f64 LE, row-major). Round-trips are bit-exact.

Model hyperparameters that are not recoverable from parameter shapes are
stored as scalar tensors under ``meta.`` names.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ovhar.errors import FormatError
from ovhar.nn.model import ModelConfig, RegressorModel

MAGIC = b"OVHR"
VERSION = 1


def write_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8")
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<Q", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}Q", *data.shape))
        chunks.append(data.tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(f"truncated checkpoint while reading {what}", offset=self.pos)
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out


def read_tensors(path: str | Path) -> dict[str, np.ndarray]:
    reader = _Reader(Path(path).read_bytes())
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}", offset=0)
    (version,) = struct.unpack("<I", reader.take(4, "version"))
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    tensors: dict[str, np.ndarray] = {}
    while reader.pos < len(reader.blob):
        (name_len,) = struct.unpack("<I", reader.take(4, "name length"))
        name = reader.take(name_len, "name").decode("utf-8")
        (rank,) = struct.unpack("<Q", reader.take(8, f"rank of {name}"))
        if rank > 8:
            raise FormatError(f"implausible rank {rank} for {name}", offset=reader.pos - 8)
        shape = struct.unpack(f"<{rank}Q", reader.take(8 * rank, f"extents of {name}"))
        count = int(np.prod(shape)) if rank else 1
        raw = reader.take(8 * count, f"data of {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return tensors


def save_checkpoint(model: RegressorModel, path: str | Path) -> None:
    tensors = dict(model.parameters())
    tensors["meta.pool_size"] = np.array([float(model.config.pool_size)])
    tensors["meta.seed"] = np.array([float(model.config.seed)])
    write_tensors(path, tensors)


def load_checkpoint(path: str | Path) -> RegressorModel:
    tensors = read_tensors(path)
    required = {
        "conv.weight",
        "lstm.fw.w_hidden",
        "head.weight",
        "meta.pool_size",
    }
    missing = required - set(tensors)
    if missing:
        raise FormatError(f"checkpoint missing tensors: {sorted(missing)}")
    filters, in_channels, kernel = tensors["conv.weight"].shape
    hidden = tensors["lstm.fw.w_hidden"].shape[1]
    out_dim = tensors["head.weight"].shape[0]
    config = ModelConfig(
        in_channels=in_channels,
        conv_filters=filters,
        kernel_size=kernel,
        pool_size=int(tensors["meta.pool_size"][0]),
        hidden_size=hidden,
        embedding_dim=out_dim,
        seed=int(tensors.get("meta.seed", np.array([0.0]))[0]),
    )
    model = RegressorModel(config, init=False)
    model.set_parameters({k: v for k, v in tensors.items() if not k.startswith("meta.")})
    return model
