"""On-disk formats: the preprocessed split container and the raw dataset tree.

Split container (little-endian)::

    16 bytes  magic  b"MSENSE-SPLIT\\0\\0\\0\\0"
    1 byte    version (1)
    4 bytes   uint32 sample count
    per sample:
        uint32 label
        3 x 32x32 float32 planes (cam_left, cam_right, cam_rs), row-major
        1024 float32 depth values

Values are stored as float32; reading gives float64 copies of those float32
values, so write -> read -> write reproduces the file byte for byte.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..errors import ArgumentError, FormatError, IngestionError
from .dataset import RawSample, SampleSet

MAGIC = b"MSENSE-SPLIT\x00\x00\x00\x00"
VERSION = 1
SIDE = 32

_RECORD = np.dtype([
    ("label", "<u4"),
    ("cams", "<f4", (3, SIDE * SIDE)),
    ("depth", "<f4", (SIDE * SIDE,)),
])


def write_split_file(path: str | os.PathLike, samples: SampleSet) -> None:
    n = len(samples)
    for name in ("cam_left", "cam_right", "cam_rs"):
        if getattr(samples, name).shape[1:] != (1, SIDE, SIDE):
            raise ArgumentError(f"{name} must be (N, 1, {SIDE}, {SIDE}) for the split container")
    if samples.depth.shape[1:] != (SIDE * SIDE,):
        raise ArgumentError(f"depth must be (N, {SIDE * SIDE})")
    rec = np.zeros(n, dtype=_RECORD)
    rec["label"] = samples.labels
    rec["cams"] = np.stack([samples.cam_left, samples.cam_right, samples.cam_rs], axis=1).reshape(n, 3, -1)
    rec["depth"] = samples.depth
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(np.uint32(n).astype("<u4").tobytes())
        fh.write(rec.tobytes())


def read_split_file(path: str | os.PathLike) -> SampleSet:
    blob = Path(path).read_bytes()
    if len(blob) < 21 or blob[:16] != MAGIC:
        raise FormatError(f"{path}: not a split container (bad magic)")
    if blob[16] != VERSION:
        raise FormatError(f"{path}: unsupported version {blob[16]}")
    n = int(np.frombuffer(blob, "<u4", count=1, offset=17)[0])
    body = blob[21:]
    if len(body) != n * _RECORD.itemsize:
        raise FormatError(f"{path}: expected {n} records ({n * _RECORD.itemsize} bytes), found {len(body)} bytes")
    rec = np.frombuffer(body, dtype=_RECORD, count=n)
    cams = rec["cams"].astype(np.float64).reshape(n, 3, 1, SIDE, SIDE)
    return SampleSet(
        np.ascontiguousarray(cams[:, 0]), np.ascontiguousarray(cams[:, 1]), np.ascontiguousarray(cams[:, 2]),
        rec["depth"].astype(np.float64),
        rec["label"].astype(np.int64),
        np.arange(n, dtype=np.int64),
    )


SENSOR_FILES = ("left.png", "right.png", "rs_rgb.png", "depth.bin")


def _read_png(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64)


def _read_depth(path: Path, shape: tuple[int, int]) -> np.ndarray:
    raw = path.read_bytes()
    expected = shape[0] * shape[1] * 2
    if len(raw) != expected:
        raise ValueError(f"expected {expected} bytes for a {shape[0]}x{shape[1]} uint16 map, got {len(raw)}")
    return np.frombuffer(raw, dtype="<u2").reshape(shape).astype(np.float64)


def load_icub_dataset(root: str | os.PathLike, depth_shape: tuple[int, int] = (480, 640),
                      max_objects: int | None = None) -> list[RawSample]:
    """Read ``<root>/<object_id>/<view_index>/{left.png,right.png,rs_rgb.png,depth.bin}``.

    Object directories are sorted numerically and labelled 0..N-1. Every
    missing or unreadable file is collected and reported in one
    IngestionError; nothing is skipped silently.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestionError(f"{root}: dataset root does not exist")

    def numeric_dirs(p: Path) -> list[Path]:
        return sorted((d for d in p.iterdir() if d.is_dir()), key=lambda d: (not d.name.isdigit(),
                      int(d.name) if d.name.isdigit() else 0, d.name))

    objects = numeric_dirs(root)
    if max_objects is not None:
        objects = objects[:max_objects]
    if not objects:
        raise IngestionError(f"{root}: no object directories found")

    samples, problems = [], []
    for label, obj in enumerate(objects):
        views = numeric_dirs(obj)
        if not views:
            problems.append(f"{obj}: no view directories")
        for view in views:
            paths = [view / f for f in SENSOR_FILES]
            missing = [str(p) for p in paths if not p.is_file()]
            if missing:
                problems.extend(f"missing {m}" for m in missing)
                continue
            try:
                imgs = [_read_png(p) for p in paths[:3]]
                depth = _read_depth(paths[3], depth_shape)
            except Exception as exc:  # decoding errors of any kind are reported, not swallowed
                problems.append(f"unreadable file in {view}: {exc}")
                continue
            angle = float(view.name) * 5.0 if view.name.isdigit() else 0.0
            samples.append(RawSample(*imgs, depth, label, angle))
    if problems:
        raise IngestionError("dataset ingestion failed:\n  " + "\n  ".join(problems))
    return samples
