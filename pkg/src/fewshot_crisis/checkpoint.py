"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"FSTC"  uint32 version  uint32 text_len  text (UTF-8)
    uint32 n_tensors
    n_tensors x [uint16 name_len, name, uint32 rank, uint32 dims[rank], float32 values]

The text block holds the training config as ``key = value`` lines, a
``[model]`` section (head, seed) and a ``[vocab]`` section listing one token
per line in id order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"FSTC"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    version: int
    config_text: str
    tensors: dict[str, np.ndarray]

    def sections(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {"config": []}
        current = "config"
        for line in self.config_text.split("\n"):
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                out[current] = []
            elif line:
                out[current].append(line)
        return out


def write_checkpoint(path: str | Path, config_text: str, tensors: dict[str, np.ndarray]) -> None:
    text = config_text.encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(text)), text, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        nb = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<H", len(nb)) + nb)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(
                f"size mismatch: {what} needs {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_checkpoint(path: str | Path) -> Checkpoint:
    r = _Reader(Path(path).read_bytes())
    if r.take(4, "magic") != MAGIC:
        raise CheckpointError("corrupt header: bad magic bytes")
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    (text_len,) = r.unpack("<I", "config length")
    try:
        text = r.take(text_len, "config text").decode("utf-8")
    except UnicodeDecodeError:
        raise CheckpointError("corrupt header: config text is not UTF-8") from None
    (n,) = r.unpack("<I", "tensor count")
    tensors = {}
    for _ in range(n):
        (name_len,) = r.unpack("<H", "tensor name length")
        name = r.take(name_len, "tensor name").decode("utf-8", errors="replace")
        (rank,) = r.unpack("<I", f"rank of {name}")
        dims = r.unpack(f"<{rank}I", f"dims of {name}")
        count = int(np.prod(dims, dtype=np.int64))
        raw = r.take(4 * count, f"values of {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
    if r.pos != len(r.data):
        raise CheckpointError(f"size mismatch: {len(r.data) - r.pos} trailing bytes")
    return Checkpoint(version, text, tensors)
