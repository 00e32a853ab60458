"""Plan execution: turn sampling or panorama plans into output frames.

Panoramas are composited in painter's order (peripheral frames first, the
central frame last, on top), placed on the segment canvas by the plan's rigid
alignment, and cut by the plan's crop path.  Plain sampling plans are frame
extraction only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np


class MissingFrame(Exception):
    """A plan references a frame the video does not have."""


@dataclass
class RenderResult:
    frames: list[np.ndarray]
    coverage: list[float] = field(default_factory=list)  # covered fraction per crop


def load_plan(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def render_sampling_plan(frames, doc: dict) -> RenderResult:
    out = []
    for idx in doc["selected"]:
        if not (0 <= idx < len(frames)):
            raise MissingFrame(f"plan references frame {idx}, video has {len(frames)}")
        out.append(frames[idx].copy())
    return RenderResult(frames=out, coverage=[1.0] * len(out))


def _rigid_matrix(a: dict, width: float, height: float) -> np.ndarray:
    c, s = math.cos(a["theta"]), math.sin(a["theta"])
    cx, cy = width / 2.0, height / 2.0
    return np.array(
        [
            [c, -s, a["tx"] + cx - (c * cx - s * cy)],
            [s, c, a["ty"] + cy - (s * cx + c * cy)],
            [0.0, 0.0, 1.0],
        ]
    )


def _corners(w, h):
    return np.array([[0.0, 0.0, 1.0], [w, 0.0, 1.0], [w, h, 1.0], [0.0, h, 1.0]]).T


def _paint(canvas, alpha, frame, M, size):
    warped = cv2.warpPerspective(frame, M, size, flags=cv2.INTER_LINEAR)
    mask = cv2.warpPerspective(
        np.full(frame.shape[:2], 255, dtype=np.uint8), M, size,
        flags=cv2.INTER_NEAREST,
    )
    on = mask > 0
    canvas[on] = warped[on]
    alpha |= on


def _pano_layers(pano: dict, frames_by_video: dict, default_video: str):
    """(frame, warp) pairs in painter's order: cross-video frames first, then
    own members peripheral to central."""
    layers = []
    for cm in pano.get("cross_members", []):
        vid_frames = frames_by_video.get(cm["video"])
        if vid_frames is None:
            continue
        if not (0 <= cm["frame"] < len(vid_frames)):
            raise MissingFrame(f"plan references frame {cm['frame']} of {cm['video']}")
        layers.append((vid_frames[cm["frame"]],
                       np.asarray(cm["warp"], dtype=np.float64).reshape(3, 3)))
    vid = pano.get("video", default_video)
    vid_frames = frames_by_video[vid]
    center = pano["center"]
    order = sorted(range(len(pano["members"])),
                   key=lambda m: -abs(pano["members"][m] - center))
    for m in order:
        f = pano["members"][m]
        if not (0 <= f < len(vid_frames)):
            raise MissingFrame(f"plan references frame {f} of {vid}")
        layers.append((vid_frames[f],
                       np.asarray(pano["warps"][m], dtype=np.float64).reshape(3, 3)))
    return layers


def render_panorama_plan(frames_by_video: dict, doc: dict,
                         default_video: str | None = None) -> RenderResult:
    """Composite the selected panoramas and apply alignment plus crop.

    ``frames_by_video`` maps video id to its frame list; single-video plans
    may pass any id and leave ``default_video`` unset.
    """
    if default_video is None:
        default_video = next(iter(frames_by_video))
    panos = doc["panoramas"]
    selected = doc["selected"]
    alignment = doc["alignment"]
    crop = doc["crop"]
    crop_w = int(round(doc["crop_w"]))
    crop_h = int(round(doc["crop_h"]))
    segments = [tuple(s) for s in doc.get("segments", [(0, len(selected))])]

    out = RenderResult(frames=[])
    for s0, s1 in segments:
        # accumulate canvas poses exactly like the planner
        poses = []
        P = np.eye(3)
        for idx in range(s0, s1):
            if idx > s0:
                pano = panos[selected[idx]]
                vid = pano.get("video", default_video)
                h, w = frames_by_video[vid][0].shape[:2]
                P = P @ _rigid_matrix(alignment[idx], w, h)
            poses.append(P.copy())
        # canvas bounds over every warped layer in the segment
        lo = np.array([np.inf, np.inf])
        hi = np.array([-np.inf, -np.inf])
        seg_layers = []
        for idx in range(s0, s1):
            pano = panos[selected[idx]]
            layers = _pano_layers(pano, frames_by_video, default_video)
            seg_layers.append(layers)
            pose = poses[idx - s0]
            for frame, H in layers:
                h, w = frame.shape[:2]
                c = (pose @ H) @ _corners(w, h)
                c = (c[:2] / c[2]).T
                lo = np.minimum(lo, c.min(axis=0))
                hi = np.maximum(hi, c.max(axis=0))
        ox, oy = int(math.floor(lo[0])), int(math.floor(lo[1]))
        gw = int(math.ceil(hi[0])) - ox + 1
        gh = int(math.ceil(hi[1])) - oy + 1
        shift = np.array([[1.0, 0.0, -ox], [0.0, 1.0, -oy], [0.0, 0.0, 1.0]])

        for idx in range(s0, s1):
            canvas = np.zeros((gh, gw, 3), dtype=np.uint8)
            alpha = np.zeros((gh, gw), dtype=bool)
            pose = poses[idx - s0]
            for frame, H in seg_layers[idx - s0]:
                _paint(canvas, alpha, frame, shift @ pose @ H, (gw, gh))
            cx = crop[idx]["cx"] - ox
            cy = crop[idx]["cy"] - oy
            x0 = int(round(cx - crop_w / 2.0))
            y0 = int(round(cy - crop_h / 2.0))
            x0 = max(0, min(x0, gw - crop_w))
            y0 = max(0, min(y0, gh - crop_h))
            cut = canvas[y0 : y0 + crop_h, x0 : x0 + crop_w]
            a = alpha[y0 : y0 + crop_h, x0 : x0 + crop_w]
            out.frames.append(cut)
            out.coverage.append(float(a.mean()) if a.size else 0.0)
    return out


def render_plan(frames_by_video: dict, plan_path: str | Path,
                default_video: str | None = None) -> RenderResult:
    doc = load_plan(plan_path)
    if "panoramas" in doc:
        return render_panorama_plan(frames_by_video, doc, default_video)
    if default_video is None:
        default_video = next(iter(frames_by_video))
    return render_sampling_plan(frames_by_video[default_video], doc)
