"""Binary checkpoints of trained graphs.

Layout (little-endian)::

    8 bytes   magic b"MSCKPT\\0\\1"
    1 byte    version
    32 bytes  SHA-256 architecture fingerprint (raw digest)
    uint32    length of the JSON metadata block, then the UTF-8 JSON
              (model id, rebuild recipe, training history)
    uint64    number of float64 values, then the values in parameters() order
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, IncompatibilityError
from .graph import Graph
from .models import rebuild

MAGIC = b"MSCKPT\x00\x01"
VERSION = 1


def save_checkpoint(graph: Graph, path: str | os.PathLike, model_id: str = "",
                    history: list | None = None) -> None:
    meta = {"model_id": model_id, "graph": graph.meta, "history": [list(h) for h in (history or [])]}
    meta_blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    flat = np.concatenate([p.ravel() for _, _, p, _ in graph.parameters()]) if graph.parameters() \
        else np.zeros(0)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(bytes.fromhex(graph.fingerprint()))
        fh.write(struct.pack("<I", len(meta_blob)))
        fh.write(meta_blob)
        fh.write(struct.pack("<Q", flat.size))
        fh.write(flat.astype("<f8").tobytes())


def read_checkpoint(path: str | os.PathLike) -> tuple[str, dict, np.ndarray]:
    """Parse a checkpoint into (fingerprint hex, metadata, flat parameter vector)."""
    blob = Path(path).read_bytes()
    head = len(MAGIC) + 1 + 32 + 4
    if len(blob) < head or blob[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic or truncated header)")
    if blob[len(MAGIC)] != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {blob[len(MAGIC)]}")
    pos = len(MAGIC) + 1
    fingerprint = blob[pos:pos + 32].hex()
    pos += 32
    (meta_len,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if len(blob) < pos + meta_len + 8:
        raise FormatError(f"{path}: truncated metadata")
    try:
        meta = json.loads(blob[pos:pos + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt metadata: {exc}") from None
    pos += meta_len
    (count,) = struct.unpack_from("<Q", blob, pos)
    pos += 8
    if len(blob) - pos != count * 8:
        raise FormatError(f"{path}: expected {count} parameters, found {(len(blob) - pos) / 8:g}")
    return fingerprint, meta, np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64)


def load_checkpoint(path: str | os.PathLike, graph: Graph | None = None) -> Graph:
    """Load parameters into ``graph`` (or into a graph rebuilt from the stored recipe).

    The architecture fingerprint must match exactly.
    """
    fingerprint, meta, flat = read_checkpoint(path)
    if graph is None:
        graph = rebuild(meta["graph"])
    if graph.fingerprint() != fingerprint:
        raise IncompatibilityError(f"{path}: checkpoint architecture does not match the target graph")
    params = graph.parameters()
    if sum(p.size for _, _, p, _ in params) != flat.size:
        raise IncompatibilityError(f"{path}: parameter count mismatch")
    pos = 0
    for _, _, p, _ in params:
        p[...] = flat[pos:pos + p.size].reshape(p.shape)
        pos += p.size
    return graph
