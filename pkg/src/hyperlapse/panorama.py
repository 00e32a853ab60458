"""Single-video panorama planning.

A panorama candidate is built around the central frame of each temporal
window: every window frame is warped into the central frame's coordinates by
chained homographies, and the candidate's field of view is the canvas area
covered by the union of the warped frame quadrilaterals.  Candidates are then
sampled with the same shortest-path machinery as frame sampling, aligned to
each other with best-fit rigid transforms, and a smooth crop path is solved
per alignment segment.

Geometry here is planning only: masks are rasterized at quarter scale and
rescaled to full-resolution pixel equivalents; no video pixels are touched.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solveh_banded
from scipy.ndimage import binary_erosion

from .costs import CostWeights, MISSING_DIRECTION_COST, shakiness_cost
from .errors import EmptyCoverage, NoPath, TrackingLost
from .trace import MotionTrace

MASK_SCALE = 0.25

FOV_DEFICIT = "deficit"
FOV_LITERAL = "literal"


@dataclass
class DisplacementTrack:
    """Mean content displacement per frame, relative to the window start."""

    window: tuple[int, int]  # [start, end)
    pos: np.ndarray  # (end-start, 2)


@dataclass
class PanoramaCandidate:
    ident: int
    video_id: str
    center: int
    members: list[int]
    warps: dict[int, np.ndarray]  # member frame -> 3x3 into center coords
    fov_pixels: float = 0.0
    canvas: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    # frames folded in from other videos: (video_id, frame, warp into center)
    cross_members: list[tuple[str, int, np.ndarray]] = field(default_factory=list)


@dataclass
class RigidTransform:
    theta: float = 0.0
    tx: float = 0.0
    ty: float = 0.0
    reset: bool = False

    def matrix(self, width: float, height: float) -> np.ndarray:
        """3x3 matrix acting on top-left-origin pixel coordinates."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        cx, cy = width / 2.0, height / 2.0
        # x' = R (x - c) + t + c
        return np.array(
            [
                [c, -s, self.tx + cx - (c * cx - s * cy)],
                [s, c, self.ty + cy - (s * cx + c * cy)],
                [0.0, 0.0, 1.0],
            ]
        )


@dataclass
class PanoramaPlan:
    video_id: str
    candidates: list[PanoramaCandidate]
    selected: list[int]
    alignment: list[RigidTransform]
    crop_centers: list[tuple[float, float]]
    segments: list[tuple[int, int]]  # [start, end) index ranges into `selected`
    crop_sizes: list[tuple[float, float]]  # per segment, full-resolution units
    total_cost: float

    def min_crop(self) -> tuple[float, float]:
        w = min(s[0] for s in self.crop_sizes)
        h = min(s[1] for s in self.crop_sizes)
        return w, h

    def to_dict(self) -> dict:
        crop_w, crop_h = self.min_crop()
        return {
            "panoramas": [
                {
                    "center": c.center,
                    "video": c.video_id,
                    "members": list(c.members),
                    "warps": [c.warps[f].reshape(-1).tolist() for f in c.members],
                    "cross_members": [
                        {"video": v, "frame": f, "warp": H.reshape(-1).tolist()}
                        for v, f, H in c.cross_members
                    ],
                    "fov": c.fov_pixels,
                }
                for c in self.candidates
            ],
            "selected": list(self.selected),
            "alignment": [
                {"theta": a.theta, "tx": a.tx, "ty": a.ty, "reset": a.reset}
                for a in self.alignment
            ],
            "crop": [{"cx": cx, "cy": cy} for cx, cy in self.crop_centers],
            "crop_w": crop_w,
            "crop_h": crop_h,
            "segments": [list(s) for s in self.segments],
            "crop_sizes": [list(s) for s in self.crop_sizes],
            "total_cost": self.total_cost,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# homography chaining and temporal windows


def chain_homography(trace: MotionTrace, a: int, b: int):
    """Chained homography mapping frame-a coordinates into frame-b coordinates.

    Returns (H, tracked); tracked is False when any hop is missing or marked
    untracked, in which case H is None.
    """
    if a == b:
        return np.eye(3), True
    lo, hi = (a, b) if a < b else (b, a)
    M = np.eye(3)
    for t in range(lo, hi):
        hl = trace.homographies.get((t, t + 1))
        if hl is None or not hl.tracked:
            return None, False
        M = hl.H @ M
    if a > b:
        M = np.linalg.inv(M)
        M = M / M[2, 2]
    return M, True


def windows(trace: MotionTrace, omega: int) -> list[tuple[int, int]]:
    """Non-overlapping omega-windows, split wherever tracking was lost."""
    if omega < 1:
        raise ValueError("omega must be >= 1")
    n = trace.n
    breaks = set()
    for t in range(n - 1):
        hl = trace.homographies.get((t, t + 1))
        if hl is None or not hl.tracked:
            breaks.add(t + 1)
    out = []
    for base in range(0, n, omega):
        end = min(base + omega, n)
        start = base
        for b in sorted(p for p in breaks if base < p < end):
            out.append((start, b))
            start = b
        out.append((start, end))
    return out


def displacement_track(trace: MotionTrace, window: tuple[int, int]) -> DisplacementTrack:
    """Per-frame displacement relative to the window start.

    Taken as the translation component of the chained homography from each
    frame back to the window's first frame; equal in spirit to the mean
    tracked-feature displacement, since the homographies come from the same
    tracks.
    """
    start, end = window
    pos = np.zeros((end - start, 2))
    M = np.eye(3)  # start -> t
    for t in range(start + 1, end):
        hl = trace.homographies.get((t - 1, t))
        if hl is None or not hl.tracked:
            raise TrackingLost(f"{trace.video_id}: tracking lost inside window at frame {t - 1}")
        M = hl.H @ M
        back = np.linalg.inv(M)
        back = back / back[2, 2]
        pos[t - start] = back[:2, 2]
    return DisplacementTrack(window=window, pos=pos)


def select_central_frames(trace: MotionTrace, omega: int) -> list[int]:
    """One central frame per window: the frame closest to the window's mean
    displacement, earliest on ties."""
    centers = []
    for win in windows(trace, omega):
        track = displacement_track(trace, win)
        mean = track.pos.mean(axis=0)
        d = np.linalg.norm(track.pos - mean, axis=1)
        centers.append(win[0] + int(np.argmin(d)))
    return centers


# ---------------------------------------------------------------------------
# field-of-view rasterization


def warp_corners(H: np.ndarray, width: float, height: float) -> np.ndarray:
    corners = np.array(
        [[0.0, 0.0, 1.0], [width, 0.0, 1.0], [width, height, 1.0], [0.0, height, 1.0]]
    )
    w = (H @ corners.T).T
    return w[:, :2] / w[:, 2:3]


def _fill_quad(mask: np.ndarray, quad: np.ndarray) -> None:
    """OR the quad interior into the mask (pixel-center point-in-polygon)."""
    h, w = mask.shape
    x0 = max(0, int(math.floor(quad[:, 0].min() - 0.5)))
    x1 = min(w, int(math.ceil(quad[:, 0].max() + 0.5)))
    y0 = max(0, int(math.floor(quad[:, 1].min() - 0.5)))
    y1 = min(h, int(math.ceil(quad[:, 1].max() + 0.5)))
    if x0 >= x1 or y0 >= y1:
        return
    px = np.arange(x0, x1) + 0.5
    py = (np.arange(y0, y1) + 0.5)[:, None]
    inside = np.zeros((y1 - y0, x1 - x0), dtype=bool)
    for e in range(4):
        xa, ya = quad[e]
        xb, yb = quad[(e + 1) % 4]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (xb - xa) * (py - ya) / (yb - ya) + xa
            crossed = ((ya > py) != (yb > py)) & (px < t)
        inside ^= crossed
    mask[y0:y1, x0:x1] |= inside


def rasterize_union(quads: list[np.ndarray], scale: float = MASK_SCALE):
    """Boolean coverage mask of the union of quads, plus the grid origin.

    Canvas point p maps to mask pixel p*scale - origin; pixel (ix, iy) is
    covered when its center lies inside some quad.
    """
    allc = np.vstack(quads) * scale
    ox = math.floor(allc[:, 0].min())
    oy = math.floor(allc[:, 1].min())
    gw = int(math.ceil(allc[:, 0].max())) - ox + 1
    gh = int(math.ceil(allc[:, 1].max())) - oy + 1
    mask = np.zeros((gh, gw), dtype=bool)
    for q in quads:
        _fill_quad(mask, q * scale - np.array([ox, oy]))
    return mask, (ox, oy)


def union_area(quads: list[np.ndarray], calib_quad: np.ndarray, calib_area: float,
               scale: float = MASK_SCALE) -> float:
    """Full-resolution pixel count of the union of quads.

    The count is calibrated against a reference quad of known area rasterized
    on the same grid, which keeps single-frame and subset unions exact and
    guarantees union >= reference whenever the reference is one of the quads.
    """
    mask, origin = rasterize_union(quads, scale)
    ref = np.zeros_like(mask)
    _fill_quad(ref, calib_quad * scale - np.array(origin))
    ref_count = int(ref.sum())
    if ref_count == 0:
        return float(int(mask.sum())) / (scale * scale)
    return float(int(mask.sum())) * (calib_area / ref_count)


# ---------------------------------------------------------------------------
# candidate construction


def build_candidate(trace: MotionTrace, center: int, omega: int,
                    members: list[int] | None = None, ident: int = 0,
                    scale: float = MASK_SCALE) -> PanoramaCandidate:
    """Panorama candidate around a central frame.

    Members default to the frames of the window containing the center.
    Members whose homography chain to the center is broken are excluded.
    """
    if members is None:
        for win in windows(trace, omega):
            if win[0] <= center < win[1]:
                members = list(range(win[0], win[1]))
                break
        else:
            raise ValueError(f"center {center} outside the trace")
    warps = {}
    kept = []
    for f in members:
        H, ok = chain_homography(trace, f, center)
        if not ok:
            if f == center:
                raise TrackingLost(f"{trace.video_id}: center {center} untracked")
            continue
        warps[f] = H
        kept.append(f)
    cand = PanoramaCandidate(
        ident=ident, video_id=trace.video_id, center=center, members=kept, warps=warps
    )
    finalize_candidate_geometry(cand, trace, scale=scale)
    return cand


def finalize_candidate_geometry(cand: PanoramaCandidate, trace: MotionTrace,
                                cross_dims: dict[str, tuple[int, int]] | None = None,
                                scale: float = MASK_SCALE) -> None:
    """Compute fov_pixels and the canvas bounding box from the warps."""
    w, h = trace.width, trace.height
    quads = [warp_corners(cand.warps[f], w, h) for f in cand.members]
    for vid, _, H in cand.cross_members:
        cw, ch = cross_dims[vid] if cross_dims else (w, h)
        quads.append(warp_corners(H, cw, ch))
    center_quad = warp_corners(np.eye(3), w, h)
    cand.fov_pixels = union_area(quads, center_quad, float(w * h), scale)
    allc = np.vstack(quads)
    cand.canvas = (
        float(allc[:, 0].min()),
        float(allc[:, 1].min()),
        float(allc[:, 0].max()),
        float(allc[:, 1].max()),
    )


def candidate_quads(cand: PanoramaCandidate, dims: dict[str, tuple[int, int]]) -> list[np.ndarray]:
    w, h = dims[cand.video_id]
    quads = [warp_corners(cand.warps[f], w, h) for f in cand.members]
    for vid, _, H in cand.cross_members:
        cw, ch = dims[vid]
        quads.append(warp_corners(H, cw, ch))
    return quads


# ---------------------------------------------------------------------------
# candidate sampling (shared with the multi-video planner)


def motion_terms(trace: MotionTrace, a: int, b: int, weights: CostWeights):
    """(shakiness, velocity) between two frames of one video.

    Frame pairs without a stored link get the missing-direction sentinel and
    zero flow; identical frames move nothing.
    """
    if a == b:
        s = 0.0
        flow = 0.0
    else:
        try:
            link = trace.links[(a, b)]
        except KeyError:
            d = 0.0 - weights.k_flow
            return MISSING_DIRECTION_COST, d * d
        s = shakiness_cost(link, weights)
        flow = link.flow_sum
    d = flow - weights.k_flow
    return s, d * d


def fov_term(fov_p: float, fov_max: float, gamma: float, fov_sign: str) -> float:
    """Non-negative cost contribution of a candidate's field of view.

    ``deficit`` rewards wide panoramas by charging the normalized shortfall
    from the widest candidate; ``literal`` charges the raw pixel count.
    """
    if fov_sign == FOV_LITERAL:
        return gamma * fov_p
    return gamma * ((fov_max - fov_p) / fov_max) if fov_max > 0 else 0.0


def candidate_edge_weight(s: float, v: float, fov_p: float, fov_max: float,
                          weights: CostWeights, fov_sign: str) -> float:
    """Edge cost between two panorama candidates (shared by the single- and
    multi-video solvers so both combine terms identically)."""
    return (weights.alpha * s + weights.beta * v) + fov_term(
        fov_p, fov_max, weights.gamma, fov_sign
    )


def solve_candidate_dag(m: int, weight_fn, succ_fn, sources: list[int],
                        sinks: set[int]):
    """Shortest path over an ordered candidate DAG.

    ``weight_fn(p, q)`` gives the edge cost, ``succ_fn(p)`` the allowed
    successors (all > p).  Ties break toward the lexicographically smallest
    candidate sequence.  Returns (selected ids, total cost).
    """
    INF = float("inf")
    D = [INF] * m
    cache: dict[tuple[int, int], float] = {}

    def w(p, q):
        key = (p, q)
        if key not in cache:
            cache[key] = weight_fn(p, q)
        return cache[key]

    for p in range(m - 1, -1, -1):
        best = INF
        for q in succ_fn(p):
            if D[q] == INF:
                continue
            cand = w(p, q) + D[q]
            if cand < best:
                best = cand
        if p in sinks:
            best = min(best, 0.0)
        D[p] = best

    start = None
    total = INF
    for s in sources:
        if D[s] < total:
            total = D[s]
            start = s
    if start is None:
        raise NoPath("no source candidate reaches the sink")
    path = [start]
    cur = start
    while True:
        if cur in sinks and D[cur] == 0.0:
            break
        nxt = None
        for q in succ_fn(cur):
            if D[q] != INF and w(cur, q) + D[q] == D[cur]:
                nxt = q
                break
        if nxt is None:  # pragma: no cover
            raise NoPath(f"reconstruction lost at candidate {cur}")
        path.append(nxt)
        cur = nxt
    real_total = sum(w(a, b) for a, b in zip(path, path[1:]))
    return path, real_total


def solve_panorama_sampling(candidates: list[PanoramaCandidate], trace: MotionTrace,
                            weights: CostWeights, tau: int = 100,
                            d_start: int = 120, d_end: int = 120,
                            fov_sign: str = FOV_DEFICIT):
    """Select panoramas by shortest path over the candidate DAG.

    Edge (p, q) costs alpha*S + beta*V between the central frames plus the
    field-of-view term of p.  Source/sink windows are in frame units; when no
    candidate center falls inside a window the first/last candidate is
    admitted so the graph always has endpoints.
    """
    m = len(candidates)
    if m == 0:
        raise NoPath("no panorama candidates")
    fov_max = max(c.fov_pixels for c in candidates)
    centers = [c.center for c in candidates]
    n = trace.n

    def weight(p, q):
        s, v = motion_terms(trace, centers[p], centers[q], weights)
        return candidate_edge_weight(
            s, v, candidates[p].fov_pixels, fov_max, weights, fov_sign
        )

    def succ(p):
        return [q for q in range(p + 1, m) if 0 < centers[q] - centers[p] <= tau]

    sources = [p for p in range(m) if centers[p] < d_start] or [0]
    sinks = set(p for p in range(m) if centers[p] >= n - d_end) or {m - 1}
    return solve_candidate_dag(m, weight, succ, sources, sinks)


# ---------------------------------------------------------------------------
# rigid alignment


def align_rigid(homography: np.ndarray | None, width: float, height: float,
                tracked: bool = True) -> RigidTransform:
    """Best-fit rotation+translation for a homography's action on the frame
    corners (orthogonal Procrustes about the image center).

    Untracked input yields the identity with the reset flag set: the next
    panorama starts a new canvas segment.
    """
    if not tracked or homography is None:
        return RigidTransform(reset=True)
    src = warp_corners(np.eye(3), width, height)
    dst = warp_corners(homography, width, height)
    c = np.array([width / 2.0, height / 2.0])
    src_c = src - c
    dst_c = dst - c
    mu_s = src_c.mean(axis=0)
    mu_d = dst_c.mean(axis=0)
    A = (dst_c - mu_d).T @ (src_c - mu_s)
    U, _, Vt = np.linalg.svd(A)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, -1.0]) @ Vt
    t = mu_d - R @ mu_s
    theta = math.atan2(R[1, 0], R[0, 0])
    return RigidTransform(theta=theta, tx=float(t[0]), ty=float(t[1]), reset=False)


# ---------------------------------------------------------------------------
# crop path


def crop_energy(cr: np.ndarray, m: np.ndarray, lam: float) -> float:
    """The quadratic objective minimized by solve_crop_path: squared distance
    to the mass centers plus lam times squared step lengths."""
    cr = np.asarray(cr, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    e = float(((cr - m) ** 2).sum())
    if len(cr) > 1:
        e += lam * float(((cr[1:] - cr[:-1]) ** 2).sum())
    return e


def solve_crop_centers(mass_centers: np.ndarray, lam: float) -> np.ndarray:
    """Exact minimizer of the crop-path energy (tridiagonal solve per axis).

    Interior points satisfy cr_i = (lam*(cr_{i-1}+cr_{i+1}) + m_i)/(2*lam+1);
    boundary points use their single neighbor.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    m = np.atleast_2d(np.asarray(mass_centers, dtype=np.float64))
    if m.shape[0] == 1:
        return m.copy()
    N = m.shape[0]
    diag = np.full(N, 1.0 + 2.0 * lam)
    diag[0] = diag[-1] = 1.0 + lam
    ab = np.zeros((2, N))
    ab[0, 1:] = -lam
    ab[1] = diag
    return solveh_banded(ab, m, lower=False)


def inscribed_half_height(mask: np.ndarray, uncovered_sum, cx: float, cy: float,
                          aspect: float) -> int:
    """Largest integer half-height of an aspect-ratio rectangle centered at
    (cx, cy) whose pixels are all covered; 0 when none fits."""
    gh, gw = mask.shape

    def fits(hv: int) -> bool:
        hu = max(1, int(round(hv * aspect)))
        r0 = int(math.floor(cy - hv))
        r1 = int(math.ceil(cy + hv))
        c0 = int(math.floor(cx - hu))
        c1 = int(math.ceil(cx + hu))
        if r0 < 0 or c0 < 0 or r1 > gh or c1 > gw:
            return False
        return uncovered_sum(r0, r1, c0, c1) == 0

    lo, hi = 0, max(gh, gw)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _integral_uncovered(mask: np.ndarray):
    unc = (~mask).astype(np.int64)
    I = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    I[1:, 1:] = unc.cumsum(axis=0).cumsum(axis=1)

    def query(r0, r1, c0, c1):
        return int(I[r1, c1] - I[r0, c1] - I[r1, c0] + I[r0, c0])

    return query


def solve_crop_path(mass_centers, lam: float, coverage_masks, aspect: float):
    """Smooth crop centers plus the fixed crop size for one alignment segment.

    ``mass_centers`` and the returned centers are in mask-pixel coordinates;
    the crop size is the largest aspect-ratio rectangle, centered at each
    solved center, inscribed in every mask (minimum over the segment).  Masks
    are eroded by one pixel first so the crop keeps a safety margin from the
    coverage boundary.
    """
    m = np.asarray(mass_centers, dtype=np.float64)
    cr = solve_crop_centers(m, lam)
    half_h = math.inf
    for idx, mask in enumerate(coverage_masks):
        safe = binary_erosion(mask, structure=np.ones((3, 3), dtype=bool))
        q = _integral_uncovered(safe)
        hv = inscribed_half_height(safe, q, cr[idx, 0], cr[idx, 1], aspect)
        if hv == 0:
            raise EmptyCoverage(
                f"no crop rectangle fits the coverage at segment position {idx}"
            )
        half_h = min(half_h, hv)
    half_w = max(1, int(round(half_h * aspect)))
    return cr, (2.0 * half_w, 2.0 * half_h)


# ---------------------------------------------------------------------------
# full pipeline


def plan_panoramas(trace: MotionTrace, omega: int = 50,
                   weights: CostWeights | None = None, lam: float = 15.0,
                   tau: int = 100, d_start: int = 120, d_end: int = 120,
                   fov_sign: str = FOV_DEFICIT,
                   scale: float = MASK_SCALE) -> PanoramaPlan:
    """End-to-end single-video panorama planning."""
    if weights is None:
        weights = CostWeights(alpha=1e7, beta=5e6, gamma=1.0)
    centers = select_central_frames(trace, omega)
    candidates = [
        build_candidate(trace, c, omega, ident=k, scale=scale)
        for k, c in enumerate(centers)
    ]
    selected, total = solve_panorama_sampling(
        candidates, trace, weights, tau=tau, d_start=d_start, d_end=d_end, fov_sign=fov_sign
    )
    alignment = alignment_chain(trace, [candidates[s].center for s in selected])
    dims = {trace.video_id: (trace.width, trace.height)}
    crop_centers, segments, crop_sizes = solve_segment_crops(
        [candidates[s] for s in selected], alignment, dims, lam,
        aspect=trace.width / trace.height, scale=scale,
    )
    return PanoramaPlan(
        video_id=trace.video_id,
        candidates=candidates,
        selected=selected,
        alignment=alignment,
        crop_centers=crop_centers,
        segments=segments,
        crop_sizes=crop_sizes,
        total_cost=total,
    )


def alignment_chain(trace: MotionTrace, centers: list[int]) -> list[RigidTransform]:
    """Rigid transform of each selected center w.r.t. the previous one."""
    out = [RigidTransform(reset=True)]
    for prev, cur in zip(centers, centers[1:]):
        H, ok = chain_homography(trace, cur, prev)
        out.append(align_rigid(H, trace.width, trace.height, tracked=ok))
    return out


def solve_segment_crops(selected_candidates: list[PanoramaCandidate],
                        alignment: list[RigidTransform],
                        dims: dict[str, tuple[int, int]], lam: float,
                        aspect: float, scale: float = MASK_SCALE):
    """Aligned coverage masks, mass centers and crop paths per reset segment.

    Returns (crop_centers, segments, crop_sizes) with centers and sizes in
    full-resolution canvas units (canvas origin: the segment's first center
    frame's top-left corner).
    """
    k = len(selected_candidates)
    seg_bounds = []
    start = 0
    for idx in range(1, k):
        if alignment[idx].reset:
            seg_bounds.append((start, idx))
            start = idx
    seg_bounds.append((start, k))

    crop_centers: list[tuple[float, float]] = []
    crop_sizes = []
    for s0, s1 in seg_bounds:
        poses = []
        P = np.eye(3)
        for idx in range(s0, s1):
            if idx > s0:
                cand = selected_candidates[idx]
                w, h = dims[cand.video_id]
                P = P @ alignment[idx].matrix(w, h)
            poses.append(P.copy())
        quads_per = []
        for idx in range(s0, s1):
            cand = selected_candidates[idx]
            quads = candidate_quads(cand, dims)
            quads_per.append([(poses[idx - s0] @ np.c_[q, np.ones(4)].T).T[:, :2] for q in quads])
        allq = [q for qs in quads_per for q in qs]
        allc = np.vstack(allq) * scale
        ox = math.floor(allc[:, 0].min())
        oy = math.floor(allc[:, 1].min())
        gw = int(math.ceil(allc[:, 0].max())) - ox + 1
        gh = int(math.ceil(allc[:, 1].max())) - oy + 1
        masks = []
        mass = []
        for qs in quads_per:
            mask = np.zeros((gh, gw), dtype=bool)
            for q in qs:
                _fill_quad(mask, q * scale - np.array([ox, oy]))
            masks.append(mask)
            ys, xs = np.nonzero(mask)
            mass.append(((xs + 0.5).mean(), (ys + 0.5).mean()))
        cr, (cw, ch) = solve_crop_path(np.asarray(mass), lam, masks, aspect)
        for row in cr:
            crop_centers.append((float((row[0] + ox) / scale), float((row[1] + oy) / scale)))
        crop_sizes.append((cw / scale, ch / scale))
    return crop_centers, seg_bounds, crop_sizes


def load_panorama_plan(path: str | Path) -> dict:
    """Raw dict form of a panorama plan file (the renderer's contract)."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
