"""Procedural stand-in for the turntable recordings.

Each object class owns a 2-D silhouette (a lobed blob with its own colour)
that is drawn into the three camera frames, and a depth profile that shapes
the depth map. Views rotate the object through a full turn with a little
positional jitter; the three cameras see it from slightly different offsets
and scales.

With ``complementary=True`` a label is a *pair* (shape, depth profile):
``label = shape * depth_classes + profile``. The cameras then only carry the
shape and the depth map only carries the profile, so a camera-only model can
at best pick between ``depth_classes`` candidates and a depth-only model
between ``n_classes / depth_classes``.
"""
from __future__ import annotations

import numpy as np

from ..errors import ArgumentError
from .dataset import RawSample

# (dx, dy, scale, background level) per camera: left, right, realsense
_CAMERAS = ((-3.0, 0.0, 1.0, 60.0), (3.0, 0.0, 1.0, 70.0), (0.0, 2.0, 0.85, 55.0))
_GOLDEN = (5 ** 0.5 - 1) / 2


def shape_params(k: int) -> dict:
    """Deterministic silhouette parameters for shape index ``k``."""
    return {
        "lobes": 2 + k % 6,
        "amplitude": 0.3 if (k // 6) % 2 == 0 else 0.15,
        "radius": 12.0 + 2.5 * ((k // 12) % 3),
        # luminance levels spread by the golden-ratio sequence, kept well above the background
        "color": (100.0 + 150.0 * ((k * _GOLDEN) % 1.0)) * np.array([1.06, 0.98, 0.95]),
    }


def _render_camera(h, w, cx, cy, angle, scale, bg, shape, noise, rng) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    dx, dy = xx - cx, yy - cy
    rho = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    r = shape["radius"] * scale * (1.0 + shape["amplitude"] * np.cos(shape["lobes"] * (theta - angle)))
    inside = rho <= r
    img = np.empty((h, w, 3))
    img[:] = bg + 10.0 * (xx / w - 0.5)[..., None]
    img[inside] = shape["color"]
    img += rng.normal(0.0, noise, size=img.shape)
    return np.clip(img, 0.0, 255.0)


def _render_depth(h, w, cx, cy, profile: int, radius: float, noise, rng) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    depth = 1000.0 + 30.0 * (yy / h)  # table plane slopes away
    rho = np.hypot(xx - cx, yy - cy) / radius
    inside = rho <= 1.0
    # (profile % 4, profile % 5) is unique for the first 20 profiles
    base = 650.0 + 50.0 * (profile % 5)
    kind = profile % 4
    if kind == 0:    # dome
        z = base - 150.0 * (1.0 - rho ** 2)
    elif kind == 1:  # crater
        z = base - 150.0 * rho ** 2
    elif kind == 2:  # tilted face
        z = base - 75.0 - 75.0 * (xx - cx) / radius
    else:            # flat face
        z = base - 100.0 + 0.0 * rho
    depth[inside] = z[inside]
    depth += rng.normal(0.0, noise, size=depth.shape)
    return np.clip(depth, 0.0, None)


def label_factors(label: int, complementary: bool, depth_classes: int = 2) -> tuple[int, int]:
    """(shape index seen by the cameras, profile index seen by the depth sensor)."""
    if complementary:
        return divmod(label, depth_classes)
    return label, label


def render_view(shape_id: int, profile: int, angle_deg: float, rng: np.random.Generator,
                image_shape: tuple[int, int] = (48, 64), pixel_noise: float = 8.0,
                depth_noise: float = 4.0) -> tuple[list[np.ndarray], np.ndarray]:
    """Three RGB frames and a depth map for one view.

    The frames depend on ``shape_id`` only and the depth map on ``profile``
    only; both share the random pose jitter drawn from ``rng``.
    """
    h, w = image_shape
    shape = shape_params(shape_id)
    angle = np.deg2rad(angle_deg + rng.uniform(-3.0, 3.0))
    jx, jy = rng.uniform(-4.0, 4.0, size=2)
    cams = [
        _render_camera(h, w, w / 2 + jx + dx, h / 2 + jy + dy, angle, scale, bg, shape, pixel_noise, rng)
        for dx, dy, scale, bg in _CAMERAS
    ]
    radius = 13.0 + rng.uniform(-2.0, 2.0)
    depth = _render_depth(h, w, w / 2 + jx, h / 2 + jy, profile, radius, depth_noise, rng)
    return cams, depth


def generate_synthetic(n_classes: int, views_per_class: int, seed: int = 0, complementary: bool = False,
                       depth_classes: int = 2, image_shape: tuple[int, int] = (48, 64),
                       pixel_noise: float = 8.0, depth_noise: float = 4.0) -> list[RawSample]:
    """Render ``n_classes * views_per_class`` samples, class-major order."""
    if n_classes < 2:
        raise ArgumentError("need at least 2 classes")
    if views_per_class < 1:
        raise ArgumentError("need at least one view per class")
    if complementary and (depth_classes < 2 or n_classes % depth_classes or n_classes // depth_classes < 2):
        raise ArgumentError(f"complementary mode needs n_classes divisible by depth_classes "
                            f"with >= 2 shapes (got {n_classes}, {depth_classes})")
    rng = np.random.default_rng(seed)
    out = []
    for label in range(n_classes):
        shape_id, profile = label_factors(label, complementary, depth_classes)
        for v in range(views_per_class):
            angle_deg = 360.0 * v / views_per_class
            cams, depth = render_view(shape_id, profile, angle_deg, rng, image_shape, pixel_noise, depth_noise)
            out.append(RawSample(cams[0], cams[1], cams[2], depth, label, angle_deg))
    return out
