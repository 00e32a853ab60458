"""Motion-trace extraction from video frames.

Per frame pair (i, i+k), k up to tau: the motion direction comes from the
epipole of the fundamental matrix over tracked feature correspondences when
that is estimable and non-degenerate, else from the focus of expansion of the
integrated sparse optical flow (grid search minimizing the angular deviation
between flow vectors and the radial directions from the candidate).  Per-link
failures are recorded as a missing direction source; extraction never aborts
on a bad pair.

The emitted JSON matches the planner's trace format exactly; an extraction
config sidecar is written next to it for provenance.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import cv2
import numpy as np

from .config import LENS_PROFILES, ExtractionConfig, sidecar_path

HIST_BINS = 32


# ---------------------------------------------------------------------------
# feature tracking


def _detect(gray, cfg, mask=None):
    pts = cv2.goodFeaturesToTrack(
        gray,
        maxCorners=cfg.max_features,
        qualityLevel=cfg.feature_quality,
        minDistance=cfg.min_feature_distance,
        mask=mask,
    )
    return np.empty((0, 1, 2), dtype=np.float32) if pts is None else pts.astype(np.float32)


def track_trajectories(grays, cfg):
    """Track corners across the whole clip.

    Returns one dict per frame mapping trajectory id -> (x, y).
    """
    n = len(grays)
    h, w = grays[0].shape
    frames_pts: list[dict[int, tuple[float, float]]] = [dict() for _ in range(n)]
    next_id = 0
    pts = _detect(grays[0], cfg)
    ids = list(range(len(pts)))
    next_id = len(pts)
    for tid, p in zip(ids, pts):
        frames_pts[0][tid] = (float(p[0, 0]), float(p[0, 1]))
    for t in range(n - 1):
        if len(pts):
            nxt, status, _ = cv2.calcOpticalFlowPyrLK(
                grays[t], grays[t + 1], pts, None,
                winSize=(21, 21), maxLevel=3,
                criteria=(cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 30, 0.01),
            )
            keep_pts = []
            keep_ids = []
            for p, ok, tid in zip(nxt, status.reshape(-1), ids):
                x, y = float(p[0, 0]), float(p[0, 1])
                if ok and 0 <= x < w and 0 <= y < h:
                    keep_pts.append(p)
                    keep_ids.append(tid)
                    frames_pts[t + 1][tid] = (x, y)
            pts = np.array(keep_pts, dtype=np.float32).reshape(-1, 1, 2)
            ids = keep_ids
        if len(pts) < 0.7 * cfg.max_features:
            mask = np.full((h, w), 255, dtype=np.uint8)
            for p in pts:
                cv2.circle(mask, (int(p[0, 0]), int(p[0, 1])),
                           cfg.min_feature_distance, 0, -1)
            fresh = _detect(grays[t + 1], cfg, mask)
            for p in fresh[: cfg.max_features - len(pts)]:
                tid = next_id
                next_id += 1
                frames_pts[t + 1][tid] = (float(p[0, 0]), float(p[0, 1]))
                ids.append(tid)
                pts = np.vstack([pts, p.reshape(1, 1, 2)]) if len(pts) else p.reshape(1, 1, 2)
    return frames_pts


def pair_correspondences(frames_pts, i, j):
    common = sorted(frames_pts[i].keys() & frames_pts[j].keys())
    pi = np.array([frames_pts[i][t] for t in common], dtype=np.float32)
    pj = np.array([frames_pts[j][t] for t in common], dtype=np.float32)
    return pi, pj


# ---------------------------------------------------------------------------
# integrated sparse flow


def grid_points(width, height, spacing):
    xs = np.arange(spacing // 2, width, spacing, dtype=np.float32)
    ys = np.arange(spacing // 2, height, spacing, dtype=np.float32)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)


def cumulative_grid_flow(grays, cfg):
    """Per-step LK flow sampled at fixed grid positions, accumulated over time.

    Returns (grid, cum) with cum[t] the vector sum of the first t step flows
    per grid point, so the integrated flow of (i, j) is cum[j] - cum[i].
    """
    h, w = grays[0].shape
    grid = grid_points(w, h, cfg.grid_spacing)
    n = len(grays)
    cum = np.zeros((n, len(grid), 2), dtype=np.float64)
    src = grid.reshape(-1, 1, 2).astype(np.float32)
    for t in range(n - 1):
        nxt, status, _ = cv2.calcOpticalFlowPyrLK(
            grays[t], grays[t + 1], src, None,
            winSize=(21, 21), maxLevel=3,
            criteria=(cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 30, 0.01),
        )
        step = (nxt - src).reshape(-1, 2).astype(np.float64)
        step[status.reshape(-1) == 0] = 0.0
        cum[t + 1] = cum[t] + step
    return grid, cum


# ---------------------------------------------------------------------------
# motion-direction estimation


def _epipole_once(pi, pj, cfg, width, height):
    """Single epipole estimate in image-i pixel coordinates, or None.

    With calibration the translation direction comes from the essential
    matrix and cheirality (stable for small baselines given enough inliers);
    otherwise from the right null space of the fundamental matrix.
    """
    if len(pi) < cfg.min_pair_points:
        return None
    if cfg.focal_px is not None:
        K = np.array([[cfg.focal_px, 0.0, width / 2.0],
                      [0.0, cfg.focal_px, height / 2.0],
                      [0.0, 0.0, 1.0]])
        Em, mask = cv2.findEssentialMat(pi, pj, K, cv2.RANSAC, 0.999,
                                        cfg.ransac_thresh_px)
        if Em is None or Em.shape != (3, 3):
            return None
        nin, _, t, _ = cv2.recoverPose(Em, pi, pj, K, mask=mask)
        if nin < max(cfg.min_pair_points, cfg.min_inlier_ratio * len(pi)):
            return None
        t = t.reshape(3)
        if abs(t[2]) < 1e-6:
            return None
        if t[2] < 0:
            t = -t
        return (float(cfg.focal_px * t[0] / t[2] + width / 2.0),
                float(cfg.focal_px * t[1] / t[2] + height / 2.0))
    F, mask = cv2.findFundamentalMat(pi, pj, cv2.FM_RANSAC,
                                     cfg.ransac_thresh_px, 0.999)
    if F is None or F.shape != (3, 3) or mask is None:
        return None
    if int(mask.sum()) < max(cfg.min_pair_points, cfg.min_inlier_ratio * len(pi)):
        return None
    _, _, Vt = np.linalg.svd(F)
    e = Vt[-1]
    if abs(e[2]) < 1e-9:
        return None
    return float(e[0] / e[2]), float(e[1] / e[2])


def estimate_epipole(pi, pj, cfg, width, height):
    """Stability-gated epipole of the pair, or None when the epipolar
    computation is unreliable.

    A pair is rejected when a homography explains most correspondences (pure
    rotation or a dominant plane), or when the estimates from the two halves
    of the correspondences and from the full set do not all mutually agree
    within ``epipole_split_tol`` in normalized units; both are symptoms of a
    broken or barely-constrained epipolar geometry.
    """
    if len(pi) < 2 * cfg.min_pair_points:
        return None
    H, hmask = cv2.findHomography(pi, pj, cv2.RANSAC, cfg.ransac_thresh_px)
    if H is not None and hmask is not None:
        if int(hmask.sum()) >= cfg.degenerate_h_ratio * len(pi):
            return None
    e1 = _epipole_once(pi[0::2], pj[0::2], cfg, width, height)
    if e1 is None:
        return None
    e2 = _epipole_once(pi[1::2], pj[1::2], cfg, width, height)
    if e2 is None:
        return None
    n1 = normalize_point(e1[0], e1[1], width, height)
    n2 = normalize_point(e2[0], e2[1], width, height)
    if math.hypot(n1[0] - n2[0], n1[1] - n2[1]) > cfg.epipole_split_tol:
        return None
    full = _epipole_once(pi, pj, cfg, width, height)
    if full is None:
        return None
    nf = normalize_point(full[0], full[1], width, height)
    for other in (n1, n2):
        if math.hypot(nf[0] - other[0], nf[1] - other[1]) > cfg.epipole_split_tol:
            return None
    return full


def estimate_foe(grid, G, width, height, cfg, min_moving=10):
    """Focus of expansion of an integrated flow field, or None.

    Coarse-to-fine grid search over candidate image points minimizing the
    magnitude-weighted angular deviation between the flow vectors and the
    outward radial directions from the candidate.
    """
    mags = np.linalg.norm(G, axis=1)
    moving = mags > cfg.foe_min_flow_px
    if moving.sum() < min_moving:
        return None
    p = grid[moving]
    d = G[moving] / mags[moving, None]
    wgt = mags[moving]

    def score(cands):
        rx = p[None, :, 0] - cands[:, 0, None]
        ry = p[None, :, 1] - cands[:, 1, None]
        rn = np.sqrt(rx * rx + ry * ry) + 1e-9
        dot = (rx * d[None, :, 0] + ry * d[None, :, 1]) / rn
        return ((1.0 - dot) * wgt[None, :]).sum(axis=1)

    xs = np.linspace(-0.25 * width, 1.25 * width, cfg.foe_grid)
    ys = np.linspace(-0.25 * height, 1.25 * height, cfg.foe_grid)
    cands = np.array([(x, y) for y in ys for x in xs])
    best = cands[int(np.argmin(score(cands)))]
    span_x = 1.5 * width / cfg.foe_grid
    span_y = 1.5 * height / cfg.foe_grid
    for _ in range(max(1, cfg.foe_refine_levels)):
        xs = np.linspace(best[0] - span_x, best[0] + span_x, 11)
        ys = np.linspace(best[1] - span_y, best[1] + span_y, 11)
        cands = np.array([(x, y) for y in ys for x in xs])
        best = cands[int(np.argmin(score(cands)))]
        span_x /= 5.0
        span_y /= 5.0
    return float(best[0]), float(best[1])


def normalize_point(px, py, width, height):
    half_diag = math.hypot(width / 2.0, height / 2.0)
    return (px - width / 2.0) / half_diag, (py - height / 2.0) / half_diag


# ---------------------------------------------------------------------------
# histograms and homographies


def color_histograms(frames):
    out = np.empty((len(frames), 3, HIST_BINS))
    for k, frame in enumerate(frames):
        for c in range(3):
            counts, _ = np.histogram(frame[:, :, c], bins=HIST_BINS, range=(0, 256))
            out[k, c] = counts / counts.sum()
    return out


def consecutive_homographies(frames_pts, n, cfg):
    homs = []
    for t in range(n - 1):
        pi, pj = pair_correspondences(frames_pts, t, t + 1)
        H = None
        inliers = 0
        if len(pi) >= 4:
            H, mask = cv2.findHomography(pi, pj, cv2.RANSAC, cfg.ransac_thresh_px * 2)
            inliers = int(mask.sum()) if mask is not None else 0
        tracked = H is not None and inliers >= cfg.homography_min_inliers \
            and abs(np.linalg.det(H[:2, :2])) > 1e-12
        if not tracked:
            H = np.eye(3)
        H = H / H[2, 2]
        homs.append({"i": t, "j": t + 1, "H": H, "tracked": bool(tracked)})
    return homs


# ---------------------------------------------------------------------------
# trace assembly


def undistort(frames, profile_name):
    profile = LENS_PROFILES[profile_name]
    if profile is None:
        return frames
    h, w = frames[0].shape[:2]
    k1, k2 = profile
    K = np.array([[0.9 * w, 0, w / 2.0], [0, 0.9 * w, h / 2.0], [0, 0, 1.0]])
    dist = np.array([k1, k2, 0.0, 0.0])
    return [cv2.undistort(f, K, dist) for f in frames]


def extract_trace(frames, fps, cfg: ExtractionConfig, video_id: str) -> dict:
    """Full trace document for one clip (see the planner's trace format)."""
    cv2.setRNGSeed(cfg.seed)
    frames = undistort(frames, cfg.lens_profile)
    h, w = frames[0].shape[:2]
    half_diag = math.hypot(w / 2.0, h / 2.0)
    grays = [cv2.cvtColor(f, cv2.COLOR_BGR2GRAY) for f in frames]
    n = len(frames)

    frames_pts = track_trajectories(grays, cfg)
    grid, cum = cumulative_grid_flow(grays, cfg)
    hists = color_histograms(frames)
    homs = consecutive_homographies(frames_pts, n, cfg)

    links = []
    for i in range(n):
        for k in range(1, min(cfg.tau, n - 1 - i) + 1):
            j = i + k
            G = cum[j] - cum[i]
            flow_sum = float(np.linalg.norm(G, axis=1).sum() / half_diag)
            pi, pj = pair_correspondences(frames_pts, i, j)
            e = estimate_epipole(pi, pj, cfg, w, h)
            if e is not None:
                dx, dy = normalize_point(e[0], e[1], w, h)
                src = "epi"
            else:
                foe = estimate_foe(grid, G, w, h, cfg)
                if foe is not None:
                    dx, dy = normalize_point(foe[0], foe[1], w, h)
                    src = "foe"
                else:
                    dx, dy, src = 0.0, 0.0, "none"
            links.append({"i": i, "j": j, "dx": dx, "dy": dy, "src": src,
                          "flow": flow_sum})

    consec = [l["flow"] for l in links if l["j"] - l["i"] == 1]
    avg_flow = sum(consec) / len(consec) if consec else 0.0
    return {
        "video_id": video_id,
        "fps": fps,
        "avg_flow": avg_flow,
        "frames": [{"i": t, "t_ms": t * 1000.0 / fps, "w": w, "h": h} for t in range(n)],
        "links": links,
        "hists": hists,
        "homs": homs,
    }


def _f9(x) -> float:
    return float(f"{float(x):.9g}")


def save_trace_doc(doc: dict, path, config: ExtractionConfig | None = None) -> None:
    """Serialize a trace document in the planner's canonical format."""
    payload = {
        "video_id": doc["video_id"],
        "fps": _f9(doc["fps"]),
        "avg_flow": _f9(doc["avg_flow"]),
        "frames": [
            {"i": f["i"], "t_ms": _f9(f["t_ms"]), "w": f["w"], "h": f["h"]}
            for f in doc["frames"]
        ],
        "links": [
            {"i": l["i"], "j": l["j"], "dx": _f9(l["dx"]), "dy": _f9(l["dy"]),
             "src": l["src"], "flow": _f9(l["flow"])}
            for l in doc["links"]
        ],
        "hists": [[[_f9(v) for v in ch] for ch in frame]
                  for frame in np.asarray(doc["hists"]).tolist()],
        "homs": [
            {"i": hm["i"], "j": hm["j"],
             "H": [_f9(v) for v in np.asarray(hm["H"]).reshape(-1).tolist()],
             "tracked": bool(hm["tracked"])}
            for hm in doc["homs"]
        ],
    }
    Path(path).write_text(json.dumps(payload, separators=(",", ":")) + "\n",
                          encoding="utf-8")
    if config is not None:
        config.save(sidecar_path(path))


# ---------------------------------------------------------------------------
# cross-video correspondence


def _orb_features(frame, orb):
    kp, desc = orb.detectAndCompute(cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY), None)
    return kp, desc


def _match_count(desc_a, desc_b, matcher, kp_a=None, kp_b=None):
    if desc_a is None or desc_b is None or len(desc_a) < 2 or len(desc_b) < 2:
        return 0, []
    pairs = matcher.knnMatch(desc_a, desc_b, k=2)
    good = [m for m, s in (p for p in pairs if len(p) == 2) if m.distance < 0.75 * s.distance]
    return len(good), good


def find_correspondences(frames_a, frames_b, cfg: ExtractionConfig):
    """Raw cross-video candidate matches (coarse-to-fine, stride coarse_skip).

    Every entry carries the refined best frame of the other video, the good
    match count, and when estimable a homography mapping frame-b coordinates
    into frame-a coordinates.
    """
    cv2.setRNGSeed(cfg.seed)
    orb = cv2.ORB_create(nfeatures=800)
    matcher = cv2.BFMatcher(cv2.NORM_HAMMING)
    feats_a = {}
    feats_b = {}

    def fa_feat(idx):
        if idx not in feats_a:
            feats_a[idx] = _orb_features(frames_a[idx], orb)
        return feats_a[idx]

    def fb_feat(idx):
        if idx not in feats_b:
            feats_b[idx] = _orb_features(frames_b[idx], orb)
        return feats_b[idx]

    matches = []
    for fa in range(0, len(frames_a), cfg.coarse_skip):
        kp_a, desc_a = fa_feat(fa)
        best_coarse, best_count = None, 0
        for fb in range(0, len(frames_b), cfg.coarse_skip):
            count, _ = _match_count(desc_a, fb_feat(fb)[1], matcher)
            if count > best_count:
                best_coarse, best_count = fb, count
        if best_coarse is None:
            continue
        lo = max(0, best_coarse - cfg.refine_radius)
        hi = min(len(frames_b), best_coarse + cfg.refine_radius + 1)
        best_fb, best_good = best_coarse, []
        best_count = 0
        for fb in range(lo, hi):
            count, good = _match_count(desc_a, fb_feat(fb)[1], matcher)
            if count > best_count:
                best_fb, best_count, best_good = fb, count, good
        entry = {"fa": fa, "fb": best_fb, "count": best_count}
        kp_b, _ = fb_feat(best_fb)
        if best_count >= 4:
            pts_a = np.float32([kp_a[m.queryIdx].pt for m in best_good])
            pts_b = np.float32([kp_b[m.trainIdx].pt for m in best_good])
            H, _ = cv2.findHomography(pts_b, pts_a, cv2.RANSAC, cfg.ransac_thresh_px * 2)
            if H is not None and H[2, 2] != 0:
                entry["H"] = [_f9(v) for v in (H / H[2, 2]).reshape(-1).tolist()]
        matches.append(entry)
    return matches


def save_correspondence(a_id, b_id, matches, path) -> None:
    doc = {"a": a_id, "b": b_id, "matches": matches}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
