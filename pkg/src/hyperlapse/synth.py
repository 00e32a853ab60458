"""Deterministic synthetic traces for testing and benchmarking.

Every generator is seeded and pure: the same arguments always produce the
same trace, byte-for-byte after serialization.
"""

from __future__ import annotations

import numpy as np

from .trace import (
    EPIPOLE,
    FOE,
    HIST_BINS,
    MISSING,
    SRC_CODE,
    FrameMeta,
    HomographyLink,
    LinkSet,
    MotionTrace,
)

DEFAULT_FPS = 30.0


def _frames(n: int, width: int, height: int, fps: float) -> list[FrameMeta]:
    return [FrameMeta(i, i * 1000.0 / fps, width, height) for i in range(n)]


def _uniform_histograms(n: int) -> np.ndarray:
    return np.full((n, 3, HIST_BINS), 1.0 / HIST_BINS)


def _all_pairs(n: int, tau: int):
    """(src, dst) arrays for every pair with gap in [1, tau]."""
    srcs = []
    dsts = []
    for k in range(1, tau + 1):
        if k >= n:
            break
        s = np.arange(0, n - k, dtype=np.int64)
        srcs.append(s)
        dsts.append(s + k)
    return np.concatenate(srcs), np.concatenate(dsts)


def _translation_homs(n: int, tx: np.ndarray, ty: np.ndarray) -> dict:
    homs = {}
    for t in range(n - 1):
        H = np.eye(3)
        H[0, 2] = tx[t]
        H[1, 2] = ty[t]
        homs[(t, t + 1)] = HomographyLink(t, t + 1, H, True)
    return homs


def make_oscillating_trace(n: int = 1000, period: int = 10, seed: int = 7,
                           phase: int | None = None, tau: int = 100,
                           width: int = 640, height: int = 480,
                           video_id: str | None = None) -> MotionTrace:
    """Oscillating-gaze wearer: one forward-looking frame per period, the rest
    looking 0.5 off-center to a side that alternates per period.

    The motion direction of a transition is the gaze of its destination
    frame, per-step flow is one unit, and histograms are identical, so the
    frames at ``phase`` (mod period) are exactly the zero-shakiness,
    zero-appearance-cost choices and a speedup equal to ``period`` matches
    the velocity term perfectly.  ``phase`` defaults to period//2 so that
    offset-0 uniform sampling lands on shaky frames.
    """
    del seed  # generator is fully deterministic; kept for CLI uniformity
    if phase is None:
        phase = period // 2
    t = np.arange(n)
    side = np.where((t // period) % 2 == 0, 0.5, -0.5)
    gaze_x = np.where(t % period == phase, 0.0, side)

    src, dst = _all_pairs(n, tau)
    links = LinkSet(
        src,
        dst,
        gaze_x[dst],
        np.zeros(len(dst)),
        np.full(len(dst), SRC_CODE[EPIPOLE], dtype=np.uint8),
        (dst - src).astype(np.float64),
    )
    shift = np.diff(np.concatenate([gaze_x, [gaze_x[-1]]])) * 8.0
    trace = MotionTrace(
        video_id=video_id or f"oscillate-n{n}-p{period}",
        fps=DEFAULT_FPS,
        frames=_frames(n, width, height, DEFAULT_FPS),
        links=links,
        histograms=_uniform_histograms(n),
        homographies=_translation_homs(n, shift[: n - 1], np.zeros(n - 1)),
    )
    trace.avg_flow = trace.consecutive_flow_mean()
    trace.validate()
    return trace


def make_driving_trace(n: int = 1200, seed: int = 11, flick_every: int = 60,
                       tau: int = 20, width: int = 1280, height: int = 720,
                       video_id: str | None = None) -> MotionTrace:
    """Driving-style failure regime: frame-to-frame flow is almost zero
    (distant static scene) except for a large sideways head flick every
    ``flick_every`` frames, so the mean flow is high while the median is
    near zero.  Between flicks the motion direction is an unstable
    estimated-FOE point."""
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    is_flick = (t % flick_every == 0) & (t > 0)
    # step_flow[t] is the flow of the consecutive link (t, t+1)
    step_flow = np.where(is_flick[1:], 30.0, 0.01)
    pre = np.concatenate([[0.0], np.cumsum(step_flow)])

    src, dst = _all_pairs(n, tau)
    flick_dst = is_flick[dst]
    flick_sign = np.where((dst // flick_every) % 2 == 0, 0.6, -0.6)
    noise = rng.uniform(-0.4, 0.4, size=(len(dst), 2))
    dx = np.where(flick_dst, flick_sign, noise[:, 0])
    dy = np.where(flick_dst, 0.0, noise[:, 1])
    code = np.where(flick_dst, SRC_CODE[EPIPOLE], SRC_CODE[FOE]).astype(np.uint8)
    trace = MotionTrace(
        video_id=video_id or f"drive-n{n}",
        fps=DEFAULT_FPS,
        frames=_frames(n, width, height, DEFAULT_FPS),
        links=LinkSet(src, dst, dx, dy, code, pre[dst] - pre[src]),
        histograms=_uniform_histograms(n),
        homographies=_translation_homs(n, rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)),
    )
    trace.avg_flow = trace.consecutive_flow_mean()
    trace.validate()
    return trace


def make_random_trace(n: int, tau: int, seed: int, foe_frac: float = 0.1,
                      missing_frac: float = 0.02, width: int = 640,
                      height: int = 480, video_id: str | None = None) -> MotionTrace:
    """Fully random trace: flows accumulate along the video, directions are
    uniform in a disc of radius 0.7, and a fraction of links carry FOE or
    missing direction sources."""
    rng = np.random.default_rng(seed)
    step_flow = rng.uniform(0.5, 2.0, size=max(n - 1, 0))
    pre = np.concatenate([[0.0], np.cumsum(step_flow)])

    src, dst = _all_pairs(n, tau) if n > 1 else (np.array([], dtype=np.int64),) * 2
    m = len(src)
    r = 0.7 * np.sqrt(rng.random(m))
    ang = rng.uniform(0, 2 * np.pi, m)
    u = rng.random(m)
    code = np.full(m, SRC_CODE[EPIPOLE], dtype=np.uint8)
    code[u < foe_frac + missing_frac] = SRC_CODE[FOE]
    code[u < missing_frac] = SRC_CODE[MISSING]

    hists = rng.random((n, 3, HIST_BINS)) + 0.01
    hists /= hists.sum(axis=2, keepdims=True)

    theta = rng.uniform(-0.01, 0.01, max(n - 1, 0))
    homs = {}
    for t in range(n - 1):
        c, s = np.cos(theta[t]), np.sin(theta[t])
        H = np.array([[c, -s, rng.uniform(-3, 3)], [s, c, rng.uniform(-3, 3)], [0, 0, 1.0]])
        homs[(t, t + 1)] = HomographyLink(t, t + 1, H, True)

    trace = MotionTrace(
        video_id=video_id or f"random-n{n}-s{seed}",
        fps=DEFAULT_FPS,
        frames=_frames(n, width, height, DEFAULT_FPS),
        links=LinkSet(src, dst, r * np.cos(ang), r * np.sin(ang), code, pre[dst] - pre[src]),
        histograms=hists,
        homographies=homs,
    )
    trace.avg_flow = trace.consecutive_flow_mean()
    trace.validate()
    return trace


def make_pair_traces(n: int = 300, delta: int = 40, seed: int = 3, tau: int = 100,
                     period: int = 10):
    """Two same-path traces shifted by ``delta`` frames plus raw cross-video
    matches (every 5th frame, translation homographies, a few decoys below
    the match-count threshold)."""
    rng = np.random.default_rng(seed)
    a = make_oscillating_trace(n=n, period=period, tau=tau, video_id="pair-a")
    b = make_oscillating_trace(n=n, period=period, tau=tau, video_id="pair-b")
    matches = []
    for fa in range(0, n, 5):
        fb = fa - delta
        if 0 <= fb < n:
            H = np.eye(3)
            H[0, 2] = rng.uniform(-20, 20)
            matches.append(
                {"fa": fa, "fb": fb, "count": int(rng.integers(20, 60)),
                 "H": H.reshape(-1).tolist()}
            )
            if rng.random() < 0.3:  # weak decoy candidate, must be pruned
                matches.append({"fa": fa, "fb": max(0, fb - 7), "count": int(rng.integers(1, 10))})
    return a, b, {("pair-a", "pair-b"): matches}
