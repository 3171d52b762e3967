"""Binary checkpoint container: a JSON header plus named float64 tensors.

Layout (all integers little-endian):

    magic "STYLENER" | u32 version | u64 header_len | header JSON (UTF-8)
    u32 tensor_count | per tensor: u32 name_len | name | u8 ndim |
    ndim * u64 dims | float64 data (C order)

The header carries a ``kind`` string plus arbitrary JSON metadata (configs,
vocabulary token lists). Writing is canonical (sorted keys), so identical
state produces identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint"]

_MAGIC = b"STYLENER"
_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    path: Union[str, Path],
    kind: str,
    meta: dict,
    tensors: dict[str, np.ndarray],
) -> None:
    header = json.dumps(
        {"kind": kind, "meta": meta}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    chunks = [_MAGIC, struct.pack("<I", _VERSION), struct.pack("<Q", len(header)), header]
    chunks.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        tensor = tensors[name]
        if not np.issubdtype(np.asarray(tensor).dtype, np.floating):
            raise CheckpointError(f"tensor {name!r} is not floating point")
        # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d
        data = np.asarray(tensor, dtype=np.float64)
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", data.ndim))
        for dim in data.shape:
            chunks.append(struct.pack("<Q", dim))
        chunks.append(data.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: Union[str, Path]) -> tuple[str, dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    view = memoryview(blob)
    if blob[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    offset = len(_MAGIC)

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise CheckpointError(f"{path}: truncated checkpoint")
        values = struct.unpack_from(fmt, view, offset)
        offset += size
        return values[0] if len(values) == 1 else values

    version = take("<I")
    if version != _VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header_len = take("<Q")
    if offset + header_len > len(blob):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(bytes(view[offset : offset + header_len]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    offset += header_len
    if not isinstance(header, dict) or "kind" not in header or "meta" not in header:
        raise CheckpointError(f"{path}: header missing kind/meta")

    tensors: dict[str, np.ndarray] = {}
    count = take("<I")
    for _ in range(count):
        name_len = take("<I")
        name = bytes(view[offset : offset + name_len]).decode("utf-8")
        offset += name_len
        ndim = take("<B")
        shape = tuple(take("<Q") for _ in range(ndim))
        n_items = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = n_items * 8
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated tensor {name!r}")
        data = np.frombuffer(view[offset : offset + nbytes], dtype="<f8").reshape(shape)
        offset += nbytes
        tensors[name] = np.array(data)  # own, writable copy
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return header["kind"], header["meta"], tensors
