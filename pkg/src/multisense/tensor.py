"""Dense float64 arrays and the handful of primitives the rest of the package needs.

Tensors are plain C-contiguous ``numpy.ndarray`` objects of dtype float64.
The helpers here add the shape checks and the deterministic conventions
(row-major flattening, lowest-index argmax) that the layers rely on.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError

DTYPE = np.float64


def as_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Copy ``data`` into a fresh float64 row-major array, optionally reshaped."""
    out = np.array(data, dtype=DTYPE, order="C", copy=True)
    if shape is not None:
        out = reshape(out, shape)
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def reshape(t: np.ndarray, new_shape: Sequence[int]) -> np.ndarray:
    t = np.asarray(t, dtype=DTYPE)
    new_shape = tuple(int(s) for s in new_shape)
    if any(s <= 0 for s in new_shape) or int(np.prod(new_shape)) != t.size:
        raise DimensionError(f"reshape: {t.shape} has {t.size} elements, cannot become {new_shape}")
    return np.ascontiguousarray(t).reshape(new_shape).copy()


def argmax(t: np.ndarray) -> int:
    """Index of the largest element of a vector (1-D or 1xC); ties go to the lowest index."""
    t = np.asarray(t)
    if t.size == 0:
        raise ArgumentError("argmax of an empty tensor")
    if t.ndim == 2 and t.shape[0] == 1:
        t = t[0]
    if t.ndim != 1:
        raise DimensionError(f"argmax expects a vector, got shape {t.shape}")
    # np.argmax returns the first occurrence of the maximum
    return int(np.argmax(t))


def argmax_rows(t: np.ndarray) -> np.ndarray:
    """Row-wise :func:`argmax` for an (N, C) batch."""
    t = np.asarray(t)
    if t.ndim != 2 or t.shape[1] == 0:
        raise DimensionError(f"argmax_rows expects (N, C) with C >= 1, got {t.shape}")
    return np.argmax(t, axis=1)


def elementwise(t: np.ndarray, f: Callable[[float], float]) -> np.ndarray:
    t = np.asarray(t, dtype=DTYPE)
    return np.array([f(x) for x in t.ravel()], dtype=DTYPE).reshape(t.shape)


def _check_axis(t: np.ndarray, axis: int) -> None:
    if not -t.ndim <= axis < t.ndim:
        raise DimensionError(f"axis {axis} out of range for rank-{t.ndim} tensor")


def reduce_sum(t: np.ndarray, axis: int) -> np.ndarray:
    t = np.asarray(t, dtype=DTYPE)
    _check_axis(t, axis)
    return t.sum(axis=axis)


def reduce_mean(t: np.ndarray, axis: int) -> np.ndarray:
    t = np.asarray(t, dtype=DTYPE)
    _check_axis(t, axis)
    return t.mean(axis=axis)
