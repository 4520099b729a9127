"""Versioned binary checkpoints.

Layout::

    magic (8 bytes) | version (u32 LE) | header length (u64 LE) | JSON header
    | raw array bytes | SHA-256 of everything before it (32 bytes)

The JSON header holds the nested state with every numpy array replaced by
``{"__array__": i}``; array ``i`` is described (dtype, shape, offset) in the
header's ``arrays`` table. Serialization is canonical, so saving a loaded
checkpoint reproduces the file byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MZAUXCKP"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(RuntimeError):
    pass


def _encode(obj, arrays: list[np.ndarray]):
    if isinstance(obj, np.ndarray):
        arrays.append(np.ascontiguousarray(obj))
        return {"__array__": len(arrays) - 1}
    if isinstance(obj, dict):
        return {str(k): _encode(v, arrays) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v, arrays) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _decode(obj, arrays: list[np.ndarray]):
    if isinstance(obj, dict):
        if set(obj) == {"__array__"}:
            return arrays[obj["__array__"]]
        return {k: _decode(v, arrays) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v, arrays) for v in obj]
    return obj


def dumps(state: dict) -> bytes:
    arrays: list[np.ndarray] = []
    tree = _encode(state, arrays)
    table, offset = [], 0
    for a in arrays:
        table.append({"dtype": a.dtype.str, "shape": list(a.shape), "offset": offset,
                      "nbytes": a.nbytes})
        offset += a.nbytes
    header = json.dumps({"state": tree, "arrays": table}, sort_keys=True,
                        separators=(",", ":")).encode()
    body = _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(a.tobytes() for a in arrays)
    return body + hashlib.sha256(body).digest()


def loads(data: bytes) -> dict:
    if len(data) < _PREFIX.size + 32:
        raise CheckpointError("file too short to be a checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"checkpoint format version {version} is not supported "
                              f"(this build reads version {VERSION})")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint is truncated or corrupt (checksum mismatch)")
    start = _PREFIX.size
    try:
        header = json.loads(body[start:start + header_len])
    except ValueError as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from None
    blob = memoryview(body)[start + header_len:]
    arrays = []
    for entry in header["arrays"]:
        raw = blob[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arrays.append(np.frombuffer(raw, dtype=np.dtype(entry["dtype"]))
                      .reshape(entry["shape"]).copy())
    return _decode(header["state"], arrays)


def save(path: str | Path, state: dict) -> None:
    """Write atomically: a crash mid-write leaves the previous file intact."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(state))
    os.replace(tmp, path)


def load(path: str | Path) -> dict:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from None
    return loads(data)
