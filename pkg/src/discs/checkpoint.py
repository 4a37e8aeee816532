"""Binary checkpoint files.

Layout (little-endian): the magic ``DISCSCKPT``, a u32 format version, a
u32-length-prefixed UTF-8 JSON metadata block (config, counters, rng state,
optimizer hyperparameters, curve log), then a u32 record count followed by
tensor records (u32 name length, UTF-8 name, u32 rank, u32 dims, f32 data).
"""
from __future__ import annotations

import io
import json
import os
import struct

from .nn import MAGIC, CheckpointFormatError, read_tensor_records, write_tensor_records

FORMAT_VERSION = 1


def encode_checkpoint(meta: dict, tensors) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    write_tensor_records(buf, tensors)
    return buf.getvalue()


def decode_checkpoint(data: bytes):
    f = io.BytesIO(data)
    magic = f.read(len(MAGIC))
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}; not a DISCS checkpoint")
    head = f.read(4)
    if len(head) != 4:
        raise CheckpointFormatError("truncated file: missing format version")
    (version,) = struct.unpack("<I", head)
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"checkpoint format version {version}, this build reads version {FORMAT_VERSION}")
    head = f.read(4)
    if len(head) != 4:
        raise CheckpointFormatError("truncated file: missing metadata length")
    (n,) = struct.unpack("<I", head)
    blob = f.read(n)
    if len(blob) != n:
        raise CheckpointFormatError("truncated file: metadata cut short")
    meta = json.loads(blob.decode("utf-8"))
    tensors = read_tensor_records(f)
    if f.read(1):
        raise CheckpointFormatError("trailing bytes after the last tensor record")
    return meta, tensors


def checkpoint_save(meta: dict, tensors, path) -> None:
    data = encode_checkpoint(meta, tensors)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def checkpoint_load(path):
    """Returns ``(meta, tensors)``; raises :class:`CheckpointFormatError` on any corruption."""
    with open(path, "rb") as f:
        return decode_checkpoint(f.read())
