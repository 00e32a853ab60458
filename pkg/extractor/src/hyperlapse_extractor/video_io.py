"""Frame I/O: video containers or directories of numbered images."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def read_frames(path: str | Path, max_frames: int | None = None):
    """Load BGR frames from a video file or an image directory.

    Returns (frames, fps); directories default to 30 fps.
    """
    path = Path(path)
    frames: list[np.ndarray] = []
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise FileNotFoundError(f"{path}: no image files")
        for f in files:
            img = cv2.imread(str(f), cv2.IMREAD_COLOR)
            if img is None:
                raise IOError(f"{f}: unreadable image")
            frames.append(img)
            if max_frames and len(frames) >= max_frames:
                break
        return frames, 30.0
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise FileNotFoundError(f"{path}: cannot open video")
    fps = cap.get(cv2.CAP_PROP_FPS) or 30.0
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(frame)
        if max_frames and len(frames) >= max_frames:
            break
    cap.release()
    if not frames:
        raise IOError(f"{path}: no decodable frames")
    return frames, float(fps)


def write_frames(frames, outdir: str | Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for k, frame in enumerate(frames):
        cv2.imwrite(str(outdir / f"{k:06d}.png"), frame)


def write_video(frames, path: str | Path, fps: float = 30.0) -> None:
    path = Path(path)
    h, w = frames[0].shape[:2]
    out = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (w, h))
    if not out.isOpened():
        raise IOError(f"{path}: cannot open video writer")
    for frame in frames:
        out.write(frame)
    out.release()
