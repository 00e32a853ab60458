"""Multi-video panorama planning.

Cross-video frame correspondence is finalized from raw candidate matches
(argmax overlap per frame, minimum match count, temporal monotonicity), then
each video's panorama candidates are enriched with the corresponding frames
of the other videos.  Joint sampling runs over all candidates merged on a
global timeline; transitions whose central frames come from different videos
pay an additive switching penalty proportional to the edge's own cost.

With one video and an empty correspondence table every operation here
reduces exactly to its single-video counterpart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .costs import CostWeights, MISSING_DIRECTION_COST
from .errors import NoPath, ParseError
from .panorama import (
    FOV_DEFICIT,
    MASK_SCALE,
    PanoramaCandidate,
    PanoramaPlan,
    RigidTransform,
    align_rigid,
    build_candidate,
    candidate_edge_weight,
    chain_homography,
    finalize_candidate_geometry,
    motion_terms,
    select_central_frames,
    solve_candidate_dag,
    solve_segment_crops,
)
from .trace import MotionTrace

MIN_MATCH_COUNT = 10


@dataclass(frozen=True)
class Match:
    frame_b: int
    count: int
    H: np.ndarray | None = None  # maps frame-b coords into frame-a coords


@dataclass
class CorrespondenceTable:
    """Finalized cross-video frame matches, per ordered video pair."""

    pairs: dict[tuple[str, str], dict[int, Match]] = field(default_factory=dict)
    raw: dict[tuple[str, str], list[dict]] = field(default_factory=dict)

    def lookup(self, a: str, b: str, frame_a: int) -> Match | None:
        return self.pairs.get((a, b), {}).get(frame_a)

    def is_empty(self) -> bool:
        return not any(self.pairs.values())


def finalize_correspondence(raw: dict[tuple[str, str], list[dict]]) -> CorrespondenceTable:
    """Prune raw candidate matches into a usable correspondence table.

    Per source frame only the candidate with the largest match count is kept
    (smallest target frame on ties); entries with fewer than MIN_MATCH_COUNT
    points are dropped as non-overlapping; a forward sweep then drops any
    entry that would map a later source frame to an earlier target frame.
    """
    table = CorrespondenceTable(raw={k: list(v) for k, v in raw.items()})
    for pair, entries in raw.items():
        best: dict[int, dict] = {}
        for e in entries:
            fa = int(e["fa"])
            cur = best.get(fa)
            if cur is None or (e["count"], -int(e["fb"])) > (cur["count"], -int(cur["fb"])):
                best[fa] = e
        kept: dict[int, Match] = {}
        last_fb = None
        for fa in sorted(best):
            e = best[fa]
            if e["count"] < MIN_MATCH_COUNT:
                continue
            fb = int(e["fb"])
            if last_fb is not None and fb < last_fb:
                continue
            H = e.get("H")
            if H is not None:
                H = np.asarray(H, dtype=np.float64).reshape(3, 3)
                if H[2, 2] != 0:
                    H = H / H[2, 2]
            kept[fa] = Match(frame_b=fb, count=int(e["count"]), H=H)
            last_fb = fb
        table.pairs[pair] = kept
    return table


def load_correspondence(paths) -> CorrespondenceTable:
    """Load raw correspondence files and finalize them."""
    raw: dict[tuple[str, str], list[dict]] = {}
    for p in paths:
        try:
            doc = json.loads(Path(p).read_text(encoding="utf-8"))
            key = (str(doc["a"]), str(doc["b"]))
            raw.setdefault(key, []).extend(doc["matches"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"{p}: malformed correspondence file ({exc})") from exc
    return finalize_correspondence(raw)


def save_raw_correspondence(a: str, b: str, matches: list[dict], path) -> None:
    doc = {"a": a, "b": b, "matches": matches}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# candidates


def build_multi_candidates(traces: list[MotionTrace], table: CorrespondenceTable,
                           omega: int, scale: float = MASK_SCALE) -> list[PanoramaCandidate]:
    """Panorama candidates for every video, enriched with corresponding frames
    from the other videos (warped by the chained member->center homography
    composed with the cross-video homography)."""
    dims = {t.video_id: (t.width, t.height) for t in traces}
    out: list[PanoramaCandidate] = []
    ident = 0
    for trace in traces:
        centers = select_central_frames(trace, omega)
        for c in centers:
            cand = build_candidate(trace, c, omega, ident=ident, scale=scale)
            for f in cand.members:
                for other in traces:
                    if other.video_id == trace.video_id:
                        continue
                    m = table.lookup(trace.video_id, other.video_id, f)
                    if m is None or m.H is None:
                        continue
                    warp = cand.warps[f] @ m.H
                    cand.cross_members.append((other.video_id, m.frame_b, warp))
            if cand.cross_members:
                finalize_candidate_geometry(cand, trace, cross_dims=dims, scale=scale)
            out.append(cand)
            ident += 1
    return out


# ---------------------------------------------------------------------------
# global timeline


def timeline_positions(candidates: list[PanoramaCandidate],
                       traces: dict[str, MotionTrace],
                       table: CorrespondenceTable,
                       mode: str = "auto") -> dict[int, float]:
    """Map every candidate's central frame onto the first video's frame axis.

    ``timestamp`` uses capture times (simultaneously shot sets);
    ``correspondence`` interpolates the monotone match points into the
    reference video (same-path, different-time sets).  Candidates that cannot
    be placed are omitted from the result.
    """
    order = list(traces)
    ref = order[0]
    if mode == "auto":
        mode = "timestamp" if table.is_empty() else "correspondence"
    pos: dict[int, float] = {}
    if len(order) == 1:
        for c in candidates:
            pos[c.ident] = float(c.center)
        return pos
    if mode == "timestamp":
        ref_fps = traces[ref].fps
        for c in candidates:
            t_ms = traces[c.video_id].frames[c.center].timestamp_ms
            pos[c.ident] = t_ms * ref_fps / 1000.0
        return pos
    for c in candidates:
        if c.video_id == ref:
            pos[c.ident] = float(c.center)
            continue
        entries = table.pairs.get((c.video_id, ref))
        if entries:
            xs = sorted(entries)
            ys = [entries[x].frame_b for x in xs]
        else:
            inv = table.pairs.get((ref, c.video_id))
            if not inv:
                continue
            by_fb = sorted((m.frame_b, fa) for fa, m in inv.items())
            xs = [fb for fb, _ in by_fb]
            ys = [fa for _, fa in by_fb]
        if not xs:
            continue
        pos[c.ident] = float(np.interp(c.center, xs, ys))
    return pos


# ---------------------------------------------------------------------------
# joint sampling


def solve_multi_sampling(candidates: list[PanoramaCandidate],
                         traces: dict[str, MotionTrace],
                         weights: CostWeights,
                         table: CorrespondenceTable | None = None,
                         cross_mult: float = 2.0,
                         tau: int = 100, d_start: int = 120, d_end: int = 120,
                         fov_sign: str = FOV_DEFICIT,
                         timeline: str = "auto"):
    """Shortest path over the merged candidate DAG.

    Same-video motion terms come straight from that video's links; for a
    cross-video edge the source center is mapped through the correspondence
    table into the target's video first.  Edges between different videos pay
    an additive penalty of ``cross_mult`` times their own pre-penalty cost.

    Returns (selected candidate ids, total cost, switch count).
    """
    if table is None:
        table = CorrespondenceTable()
    pos = timeline_positions(candidates, traces, table, timeline)
    placed = [c for c in candidates if c.ident in pos]
    if not placed:
        raise NoPath("no candidate could be placed on the global timeline")
    video_idx = {vid: k for k, vid in enumerate(traces)}
    placed.sort(key=lambda c: (pos[c.ident], video_idx[c.video_id], c.center))
    m = len(placed)
    fov_max = max(c.fov_pixels for c in placed)
    ref = next(iter(traces))
    n_ref = traces[ref].n

    def pre_weight(p: int, q: int) -> float:
        cp, cq = placed[p], placed[q]
        if cp.video_id == cq.video_id:
            s, v = motion_terms(traces[cp.video_id], cp.center, cq.center, weights)
        else:
            match = table.lookup(cp.video_id, cq.video_id, cp.center)
            if match is not None:
                s, v = motion_terms(traces[cq.video_id], match.frame_b, cq.center, weights)
            else:
                d = 0.0 - weights.k_flow
                s, v = MISSING_DIRECTION_COST, d * d
        return candidate_edge_weight(s, v, cp.fov_pixels, fov_max, weights, fov_sign)

    def weight(p: int, q: int) -> float:
        w = pre_weight(p, q)
        if placed[p].video_id != placed[q].video_id and w != 0.0:
            w = w + cross_mult * w
        return w

    def succ(p: int):
        out = []
        cp = placed[p]
        for q in range(p + 1, m):
            cq = placed[q]
            if pos[cq.ident] - pos[cp.ident] > tau:
                break
            if cp.video_id == cq.video_id and cq.center <= cp.center:
                continue
            out.append(q)
        return out

    sources = [p for p in range(m) if pos[placed[p].ident] < d_start] or [0]
    sinks = set(p for p in range(m) if pos[placed[p].ident] >= n_ref - d_end) or {m - 1}
    try:
        path, total = solve_candidate_dag(m, weight, succ, sources, sinks)
    except NoPath:
        # report where the merged timeline breaks
        reach = set(sources)
        frontier = list(sources)
        while frontier:
            p = frontier.pop()
            for q in succ(p):
                if q not in reach:
                    reach.add(q)
                    frontier.append(q)
        last = max(reach, key=lambda p: pos[placed[p].ident])
        c = placed[last]
        raise NoPath(
            f"merged candidate graph is disconnected: nothing within tau={tau} "
            f"after center {c.center} of video {c.video_id} "
            f"(timeline position {pos[c.ident]:.1f})"
        ) from None
    switches = sum(
        1 for a, b in zip(path, path[1:]) if placed[a].video_id != placed[b].video_id
    )
    return [placed[p].ident for p in path], total, switches


# ---------------------------------------------------------------------------
# full pipeline


def cross_center_homography(trace_p: MotionTrace, trace_q: MotionTrace,
                            center_p: int, center_q: int,
                            table: CorrespondenceTable):
    """Homography mapping q's center coordinates into p's center coordinates,
    via the correspondence table; (None, False) when no route exists."""
    m = table.lookup(trace_q.video_id, trace_p.video_id, center_q)
    if m is not None and m.H is not None:
        chain, ok = chain_homography(trace_p, m.frame_b, center_p)
        if ok:
            H = chain @ m.H
            return H / H[2, 2], True
    m = table.lookup(trace_p.video_id, trace_q.video_id, center_p)
    if m is not None and m.H is not None:
        chain, ok = chain_homography(trace_q, m.frame_b, center_q)
        if ok:
            H = np.linalg.inv(chain @ m.H)
            return H / H[2, 2], True
    return None, False


def plan_multi(traces: list[MotionTrace], table: CorrespondenceTable | None = None,
               omega: int = 50, weights: CostWeights | None = None,
               lam: float = 15.0, tau: int = 100,
               d_start: int = 120, d_end: int = 120,
               cross_mult: float = 2.0, fov_sign: str = FOV_DEFICIT,
               timeline: str = "auto", scale: float = MASK_SCALE) -> PanoramaPlan:
    """End-to-end multi-video panorama planning."""
    if weights is None:
        weights = CostWeights(alpha=1e7, beta=5e6, gamma=1.0)
    if table is None:
        table = CorrespondenceTable()
    by_id = {t.video_id: t for t in traces}
    candidates = build_multi_candidates(traces, table, omega, scale=scale)
    selected, total, _ = solve_multi_sampling(
        candidates, by_id, weights, table, cross_mult=cross_mult, tau=tau,
        d_start=d_start, d_end=d_end, fov_sign=fov_sign, timeline=timeline,
    )
    by_ident = {c.ident: c for c in candidates}
    chosen = [by_ident[i] for i in selected]

    alignment = [RigidTransform(reset=True)]
    for prev, cur in zip(chosen, chosen[1:]):
        tp, tq = by_id[prev.video_id], by_id[cur.video_id]
        if prev.video_id == cur.video_id:
            H, ok = chain_homography(tp, cur.center, prev.center)
        else:
            H, ok = cross_center_homography(tp, tq, prev.center, cur.center, table)
        alignment.append(align_rigid(H, tq.width, tq.height, tracked=ok))

    dims = {t.video_id: (t.width, t.height) for t in traces}
    ref = traces[0]
    crop_centers, segments, crop_sizes = solve_segment_crops(
        chosen, alignment, dims, lam, aspect=ref.width / ref.height, scale=scale
    )
    return PanoramaPlan(
        video_id="+".join(t.video_id for t in traces),
        candidates=candidates,
        selected=selected,
        alignment=alignment,
        crop_centers=crop_centers,
        segments=segments,
        crop_sizes=crop_sizes,
        total_cost=total,
    )
