"""Binary checkpoints: network description plus every parameter tensor, bit for bit.

Layout::

    b"HDNW"                      magic
    <u32 little-endian>          format version (1)
    <u32 little-endian> <bytes>  UTF-8 JSON header: spec, tensor manifest, metadata
    tensors in manifest order, each as little-endian float64 (re, im) pairs
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .network import NetworkSpec, ParameterSet

MAGIC = b"HDNW"
VERSION = 1
_U32 = struct.Struct("<I")


class CheckpointError(Exception):
    code = "checkpoint"


class BadMagicError(CheckpointError):
    code = "bad-magic"


class VersionMismatchError(CheckpointError):
    code = "version"


class TruncatedCheckpointError(CheckpointError):
    code = "truncated"


class CorruptCheckpointError(CheckpointError):
    code = "corrupt"


@dataclass
class Checkpoint:
    spec: NetworkSpec
    params: ParameterSet
    metadata: dict = field(default_factory=dict)


def to_bytes(ckpt: Checkpoint) -> bytes:
    ckpt.params.check_congruent(ckpt.spec)
    manifest = [{"layer": i, "name": name, "shape": list(arr.shape)}
                for i, name, arr in ckpt.params.items()]
    header = json.dumps({"spec": ckpt.spec.to_dict(), "tensors": manifest,
                         "metadata": ckpt.metadata}, sort_keys=True).encode("utf-8")
    chunks = [MAGIC, _U32.pack(VERSION), _U32.pack(len(header)), header]
    for _, _, arr in ckpt.params.items():
        chunks.append(np.ascontiguousarray(arr, dtype="<c16").tobytes())
    return b"".join(chunks)


def from_bytes(buf: bytes) -> Checkpoint:
    if len(buf) < 4:
        raise TruncatedCheckpointError(f"file ends after {len(buf)} bytes, inside the magic")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"magic {buf[:4]!r} is not {MAGIC!r}")
    if len(buf) < 12:
        raise TruncatedCheckpointError(f"file ends after {len(buf)} bytes, inside the header prefix")
    (version,) = _U32.unpack_from(buf, 4)
    if version != VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, this build reads {VERSION}")
    (size,) = _U32.unpack_from(buf, 8)
    offset = 12 + size
    if len(buf) < offset:
        raise TruncatedCheckpointError(f"header needs {size} bytes, only {len(buf) - 12} present")
    try:
        header = json.loads(buf[12:offset].decode("utf-8"))
        spec = NetworkSpec.from_dict(header["spec"])
        manifest = header["tensors"]
        metadata = header.get("metadata", {})
        if not isinstance(manifest, list) or not isinstance(metadata, dict):
            raise TypeError("tensors must be a list and metadata an object")
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CorruptCheckpointError(f"unreadable header: {exc}") from exc

    groups = [{} for _ in spec.layers]
    for entry in manifest:
        try:
            layer, name, shape = int(entry["layer"]), str(entry["name"]), tuple(int(s) for s in entry["shape"])
            if not 0 <= layer < len(groups) or any(s < 0 for s in shape):
                raise ValueError(f"bad manifest entry {entry}")
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptCheckpointError(f"unreadable tensor manifest: {exc}") from exc
        nbytes = 16 * int(np.prod(shape, dtype=np.int64))
        if len(buf) < offset + nbytes:
            raise TruncatedCheckpointError(
                f"tensor {layer}/{name} needs {nbytes} bytes at offset {offset}"
            )
        arr = np.frombuffer(buf, dtype="<c16", count=nbytes // 16, offset=offset)
        groups[layer][name] = arr.astype(np.complex128).reshape(shape)
        offset += nbytes
    if offset != len(buf):
        raise CorruptCheckpointError(f"{len(buf) - offset} unexpected bytes after the last tensor")
    params = ParameterSet(groups)
    try:
        params.check_congruent(spec)
    except ValueError as exc:
        raise CorruptCheckpointError(str(exc)) from exc
    if not all(np.all(np.isfinite(arr)) for _, _, arr in params.items()):
        raise CorruptCheckpointError("non-finite parameter values")
    return Checkpoint(spec, params, metadata)


def save(path, ckpt: Checkpoint) -> None:
    """Write atomically: a reader never sees a half-written file."""
    data = to_bytes(ckpt)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".hdnw-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
