"""Extraction settings, serialized alongside each trace for provenance."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


# Simple radial lens profiles (k1, k2).  Frames are undistorted before any
# stitching; cropping happens after stitching so the extra field of view from
# the undistorted corners is kept.
LENS_PROFILES: dict[str, tuple[float, float] | None] = {
    "none": None,
    "wide-action-cam": (-0.28, 0.08),
}


@dataclass
class ExtractionConfig:
    tau: int = 20                     # max frame gap for motion links
    grid_spacing: int = 16            # px between sparse-flow grid points
    max_features: int = 500           # corners tracked for geometry
    feature_quality: float = 0.01
    min_feature_distance: int = 7
    focal_px: float | None = None     # calibration; enables the essential route
    ransac_thresh_px: float = 1.0     # epipolar-geometry inlier threshold
    min_pair_points: int = 15         # fewer correspondences -> no epipole
    min_inlier_ratio: float = 0.5     # pose inliers / correspondences
    epipole_split_tol: float = 0.02   # split-half agreement, normalized units
    homography_min_inliers: int = 8
    degenerate_h_ratio: float = 0.85  # H explains >= this share of the pairs
    foe_grid: int = 24                # coarse FOE search resolution per axis
    foe_refine_levels: int = 3
    foe_min_flow_px: float = 0.4      # grid vectors below this are noise
    lens_profile: str = "none"
    coarse_skip: int = 10             # cross-video search stride
    refine_radius: int = 9            # +/- frames refined around the best
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def sidecar_path(trace_path: str | Path) -> Path:
    p = Path(trace_path)
    return p.with_name(p.stem + ".config.json")
