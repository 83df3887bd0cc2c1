"""Image and depth preprocessing: luminance, bilinear resampling, flattening."""
from __future__ import annotations

import numpy as np

from ..errors import DimensionError

# ITU-R BT.601 luma weights
LUMA = np.array([0.299, 0.587, 0.114])


def grayscale(rgb: np.ndarray) -> np.ndarray:
    """(H, W, 3) values in 0..255 -> (H, W) float luminance, not re-quantised."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DimensionError(f"grayscale expects (H, W, 3), got {rgb.shape}")
    return rgb @ LUMA


def _sample_grid(n_in: int, n_out: int):
    # half-pixel centres (align_corners=False), clamped at the borders
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def bilinear_resize(x: np.ndarray, out_shape: tuple[int, int] = (32, 32)) -> np.ndarray:
    """Resample a 2-D array with bilinear weights (no antialiasing).

    Constant inputs stay constant and resizing to the same shape is the
    identity.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise DimensionError(f"bilinear_resize needs a 2-D array with both sides >= 2, got {x.shape}")
    oh, ow = out_shape
    if oh < 1 or ow < 1:
        raise DimensionError(f"bad output shape {out_shape}")
    r0, r1, fy = _sample_grid(x.shape[0], oh)
    c0, c1, fx = _sample_grid(x.shape[1], ow)
    fy = fy[:, None]
    fx = fx[None, :]
    top = x[r0][:, c0] * (1 - fx) + x[r0][:, c1] * fx
    bottom = x[r1][:, c0] * (1 - fx) + x[r1][:, c1] * fx
    return top * (1 - fy) + bottom * fy


def preprocess_image(rgb: np.ndarray, size: int = 32) -> np.ndarray:
    """RGB frame -> (1, size, size) grayscale plane, still on the 0..255 scale."""
    return bilinear_resize(grayscale(rgb), (size, size))[None]


def preprocess_depth(depth: np.ndarray, size: int = 32) -> np.ndarray:
    """Depth map in mm -> flat (size*size,) vector, row-major."""
    return bilinear_resize(depth, (size, size)).reshape(-1)
