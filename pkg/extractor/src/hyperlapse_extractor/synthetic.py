"""Synthetic clips with known ego-motion, used to validate the extractor.

Scenes are clouds of small textured squares (fronto-parallel, random texture)
rendered through a pinhole camera.  Texture patches scale with true
perspective, so every tracked point corresponds to a real scene point and the
expected motion direction is known exactly.
"""

from __future__ import annotations

import math

import cv2
import numpy as np

PATCH_TEX = 16     # texture resolution per scene square
PATCH_WORLD = 0.18  # square edge length in scene units


def synthetic_focal(width: int) -> float:
    """Focal length (px) used by every synthetic clip."""
    return 0.8 * width


def _scene(rng, count=500, depth=(4.0, 12.0), spread=8.0):
    pts = np.empty((count, 3))
    pts[:, 0] = rng.uniform(-spread, spread, count)
    pts[:, 1] = rng.uniform(-spread * 0.75, spread * 0.75, count)
    pts[:, 2] = rng.uniform(depth[0], depth[1], count)
    tex = rng.integers(20, 256, size=(count, PATCH_TEX, PATCH_TEX, 3)).astype(np.uint8)
    return pts, tex


def _render(points_cam, tex, width, height, focal):
    frame = np.zeros((height, width, 3), dtype=np.uint8)
    z = points_cam[:, 2]
    for idx in np.argsort(-z):  # far squares first, near ones painted on top
        if z[idx] <= 0.8:
            continue
        u = focal * points_cam[idx, 0] / z[idx] + width / 2.0
        v = focal * points_cam[idx, 1] / z[idx] + height / 2.0
        size = focal * PATCH_WORLD / z[idx]
        if size < 2 or not (-40 <= u <= width + 40 and -40 <= v <= height + 40):
            continue
        s = size / PATCH_TEX
        M = np.float32([[s, 0.0, u - size / 2], [0.0, s, v - size / 2]])
        cv2.warpAffine(tex[idx], M, (width, height), dst=frame,
                       flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_TRANSPARENT)
    return frame


def _yaw(points, phi):
    c, s = math.cos(phi), math.sin(phi)
    R = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return points @ R.T


def _clip(n, width, height, seed, step, yaw_fn):
    rng = np.random.default_rng(seed)
    world, tex = _scene(rng)
    focal = synthetic_focal(width)
    frames = []
    for t in range(n):
        cam = world - np.array([0.0, 0.0, t * step])
        cam = _yaw(cam, yaw_fn(t))
        frames.append(_render(cam, tex, width, height, focal))
    return frames


def forward_translation_clip(n=30, width=640, height=480, seed=1, step=0.12):
    """Camera translating straight ahead: motion direction at the image center."""
    return _clip(n, width, height, seed, step, lambda t: 0.0)


def rotation_clip(n=30, width=640, height=480, seed=1, rate=0.004):
    """Pure yaw rotation: no translation, so no epipolar geometry."""
    return _clip(n, width, height, seed, 0.0, lambda t: t * rate)


def static_clip(n=20, width=640, height=480, seed=1):
    """No motion at all."""
    return _clip(n, width, height, seed, 0.0, lambda t: 0.0)


def oscillating_clip(n=30, width=640, height=480, seed=1, step=0.12,
                     amp=0.06, period=8):
    """Forward translation with the gaze swinging side to side."""
    return _clip(n, width, height, seed, step,
                 lambda t: amp * math.sin(2 * math.pi * t / period))
