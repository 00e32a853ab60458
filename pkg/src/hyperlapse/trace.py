"""Motion-trace data model and JSON (de)serialization.

The planners never touch pixels.  Everything they consume — per-pair motion
directions, integrated-flow magnitudes, color histograms and homography
chains — is carried by a :class:`MotionTrace`, typically loaded from a trace
file produced by an extractor.

A trace is immutable after load and safe to share read-only across threads.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import InvariantError, ParseError

HIST_BINS = 32

# direction_source values
EPIPOLE = "epipole"
FOE = "foe"
MISSING = "missing"

_SRC_TO_FILE = {EPIPOLE: "epi", FOE: "foe", MISSING: "none"}
_SRC_FROM_FILE = {v: k for k, v in _SRC_TO_FILE.items()}
SRC_CODE = {EPIPOLE: 0, FOE: 1, MISSING: 2}
_CODE_SRC = {v: k for k, v in SRC_CODE.items()}


@dataclass(frozen=True)
class FrameMeta:
    """Identity of one input frame."""

    index: int
    timestamp_ms: float
    width: int
    height: int


@dataclass(frozen=True)
class MotionLink:
    """Motion evidence for the ordered frame pair (src, dst).

    ``direction`` is the motion-direction point (epipole or focus of
    expansion) in normalized image coordinates: image center at (0, 0),
    half-diagonal equal to 1.  ``flow_sum`` is the aggregate integrated-flow
    magnitude between the two frames, in the same normalized units; it grows
    with the frame gap for a steadily moving camera.
    """

    src: int
    dst: int
    direction: tuple[float, float]
    direction_source: str
    flow_sum: float


@dataclass(frozen=True)
class ColorHistogram:
    """Per-channel color histogram, mass-normalized (each channel sums to 1)."""

    bins: np.ndarray  # shape (3, B)


@dataclass(frozen=True)
class HomographyLink:
    """3x3 homography mapping src-frame coordinates into dst-frame coordinates.

    ``tracked`` is False where feature tracking was lost; such links must not
    be chained.
    """

    src: int
    dst: int
    H: np.ndarray  # (3, 3), H[2][2] == 1
    tracked: bool = True


class LinkSet(Mapping):
    """Columnar, immutable store of motion links keyed by ``(src, dst)``.

    Rows are kept sorted by (src, dst); keyed access uses binary search so the
    store scales to millions of links without a per-link index dict.
    """

    __slots__ = ("src", "dst", "dx", "dy", "code", "flow", "_key")

    def __init__(self, src, dst, dx, dy, code, flow):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        key = src << 32 | dst
        order = np.argsort(key, kind="stable")
        self.src = src[order]
        self.dst = dst[order]
        self.dx = np.asarray(dx, dtype=np.float64)[order]
        self.dy = np.asarray(dy, dtype=np.float64)[order]
        self.code = np.asarray(code, dtype=np.uint8)[order]
        self.flow = np.asarray(flow, dtype=np.float64)[order]
        self._key = key[order]

    @classmethod
    def from_links(cls, links: Iterable[MotionLink]) -> "LinkSet":
        links = list(links)
        return cls(
            [l.src for l in links],
            [l.dst for l in links],
            [l.direction[0] for l in links],
            [l.direction[1] for l in links],
            [SRC_CODE[l.direction_source] for l in links],
            [l.flow_sum for l in links],
        )

    def _row(self, key: tuple[int, int]) -> int:
        packed = (int(key[0]) << 32) | int(key[1])
        pos = int(np.searchsorted(self._key, packed))
        if pos >= len(self._key) or self._key[pos] != packed:
            raise KeyError(key)
        return pos

    def __getitem__(self, key: tuple[int, int]) -> MotionLink:
        r = self._row(key)
        return MotionLink(
            int(self.src[r]),
            int(self.dst[r]),
            (float(self.dx[r]), float(self.dy[r])),
            _CODE_SRC[int(self.code[r])],
            float(self.flow[r]),
        )

    def __contains__(self, key) -> bool:
        try:
            self._row(key)
            return True
        except (KeyError, TypeError, IndexError):
            return False

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for s, d in zip(self.src, self.dst):
            yield (int(s), int(d))

    def __len__(self) -> int:
        return len(self.src)


@dataclass
class MotionTrace:
    """All motion evidence for one video."""

    video_id: str
    fps: float
    frames: list[FrameMeta]
    links: LinkSet
    histograms: np.ndarray  # (n, 3, B)
    homographies: dict[tuple[int, int], HomographyLink] = field(default_factory=dict)
    avg_flow: float = 0.0

    @property
    def n(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def histogram(self, index: int) -> ColorHistogram:
        return ColorHistogram(self.histograms[index])

    def consecutive_flow_mean(self) -> float:
        mask = self.links.dst - self.links.src == 1
        if not mask.any():
            return 0.0
        return float(self.links.flow[mask].mean())

    def validate(self) -> None:
        """Check every documented invariant; raise InvariantError on failure."""
        n = self.n
        if n == 0:
            raise InvariantError(f"{self.video_id}: trace has no frames")
        for t, fm in enumerate(self.frames):
            if fm.index != t:
                raise InvariantError(
                    f"{self.video_id}: frame indices not dense at position {t} (got {fm.index})"
                )
            if fm.width <= 0 or fm.height <= 0:
                raise InvariantError(f"{self.video_id}: frame {t} has non-positive dimensions")
            if fm.width != self.width or fm.height != self.height:
                raise InvariantError(f"{self.video_id}: frame {t} resolution differs from frame 0")

        gaps = self.links.dst - self.links.src
        if len(gaps) and gaps.min() < 1:
            bad = int(self.links.src[int(np.argmin(gaps))])
            raise InvariantError(f"{self.video_id}: non-forward link at frame {bad}")
        consec = set(
            zip(
                self.links.src[gaps == 1].tolist(),
                self.links.dst[gaps == 1].tolist(),
            )
        )
        for t in range(n - 1):
            if (t, t + 1) not in consec:
                raise InvariantError(f"{self.video_id}: missing consecutive link at frame {t}")
        if len(self.links.flow) and self.links.flow.min() < 0:
            bad = int(self.links.src[int(np.argmin(self.links.flow))])
            raise InvariantError(f"{self.video_id}: negative flow_sum at frame {bad}")
        usable = self.links.code != SRC_CODE[MISSING]
        if usable.any():
            finite = np.isfinite(self.links.dx[usable]) & np.isfinite(self.links.dy[usable])
            if not finite.all():
                bad = int(self.links.src[usable][int(np.argmin(finite))])
                raise InvariantError(f"{self.video_id}: non-finite direction at frame {bad}")

        if self.histograms.ndim != 3 or self.histograms.shape[:2] != (n, 3):
            raise InvariantError(
                f"{self.video_id}: histogram array has shape {self.histograms.shape}, "
                f"expected ({n}, 3, B)"
            )
        if self.histograms.min() < 0:
            bad = int(np.argwhere(self.histograms.min(axis=(1, 2)) < 0)[0][0])
            raise InvariantError(f"{self.video_id}: negative histogram bin at frame {bad}")
        sums = self.histograms.sum(axis=2)
        off = np.abs(sums - 1.0) > 1e-9
        if off.any():
            bad = int(np.argwhere(off.any(axis=1))[0][0])
            raise InvariantError(
                f"{self.video_id}: histogram channel of frame {bad} sums to "
                f"{sums[bad][off[bad]][0]:.9g}, expected 1"
            )

        for (i, j), hl in self.homographies.items():
            if hl.H.shape != (3, 3):
                raise InvariantError(f"{self.video_id}: homography ({i},{j}) is not 3x3")
            if hl.H[2, 2] != 1.0:
                raise InvariantError(f"{self.video_id}: homography ({i},{j}) not normalized")
            if hl.tracked and np.linalg.det(hl.H[:2, :2]) == 0.0:
                raise InvariantError(
                    f"{self.video_id}: tracked homography ({i},{j}) has singular 2x2 part"
                )

        recomputed = self.consecutive_flow_mean()
        tol = 1e-6 * max(abs(recomputed), 1e-12)
        if abs(self.avg_flow - recomputed) > tol:
            raise InvariantError(
                f"{self.video_id}: stored avg_flow {self.avg_flow:.9g} differs from "
                f"recomputed {recomputed:.9g}"
            )


def normalize_direction(px: tuple[float, float], width: float, height: float) -> tuple[float, float]:
    """Map a pixel point to normalized coordinates.

    The image center maps to (0, 0) and any corner to norm 1, so directions
    are comparable across resolutions.
    """
    half_diag = math.hypot(width / 2.0, height / 2.0)
    return ((px[0] - width / 2.0) / half_diag, (px[1] - height / 2.0) / half_diag)


def _f9(x: float) -> float:
    """Round to 9 significant digits (canonical on-disk float precision)."""
    return float(f"{float(x):.9g}")


def trace_to_dict(trace: MotionTrace) -> dict:
    links = trace.links
    return {
        "video_id": trace.video_id,
        "fps": _f9(trace.fps),
        "avg_flow": _f9(trace.avg_flow),
        "frames": [
            {"i": f.index, "t_ms": _f9(f.timestamp_ms), "w": f.width, "h": f.height}
            for f in trace.frames
        ],
        "links": [
            {
                "i": int(links.src[r]),
                "j": int(links.dst[r]),
                "dx": _f9(links.dx[r]),
                "dy": _f9(links.dy[r]),
                "src": _SRC_TO_FILE[_CODE_SRC[int(links.code[r])]],
                "flow": _f9(links.flow[r]),
            }
            for r in range(len(links))
        ],
        "hists": [[[_f9(v) for v in ch] for ch in frame] for frame in trace.histograms.tolist()],
        "homs": [
            {
                "i": i,
                "j": j,
                "H": [_f9(v) for v in hl.H.reshape(-1).tolist()],
                "tracked": bool(hl.tracked),
            }
            for (i, j), hl in sorted(trace.homographies.items())
        ],
    }


def save_trace(trace: MotionTrace, path: str | Path) -> None:
    """Write the canonical trace JSON (deterministic key order and formatting)."""
    payload = json.dumps(trace_to_dict(trace), separators=(",", ":"))
    Path(path).write_text(payload + "\n", encoding="utf-8")


def trace_from_dict(doc: dict, origin: str = "<dict>") -> MotionTrace:
    try:
        frames = [
            FrameMeta(int(f["i"]), float(f["t_ms"]), int(f["w"]), int(f["h"]))
            for f in doc["frames"]
        ]
        raw_links = doc["links"]
        links = LinkSet(
            [int(l["i"]) for l in raw_links],
            [int(l["j"]) for l in raw_links],
            [float(l["dx"]) for l in raw_links],
            [float(l["dy"]) for l in raw_links],
            [SRC_CODE[_SRC_FROM_FILE[l["src"]]] for l in raw_links],
            [float(l["flow"]) for l in raw_links],
        )
        hists = np.asarray(doc["hists"], dtype=np.float64)
        homs = {}
        for h in doc.get("homs", []):
            H = np.asarray(h["H"], dtype=np.float64).reshape(3, 3)
            if H[2, 2] == 0.0:
                raise InvariantError(
                    f"{origin}: homography ({h['i']},{h['j']}) has zero scale entry"
                )
            H = H / H[2, 2]
            homs[(int(h["i"]), int(h["j"]))] = HomographyLink(
                int(h["i"]), int(h["j"]), H, bool(h["tracked"])
            )
        trace = MotionTrace(
            video_id=str(doc["video_id"]),
            fps=float(doc["fps"]),
            frames=frames,
            links=links,
            histograms=hists,
            homographies=homs,
            avg_flow=float(doc["avg_flow"]) if "avg_flow" in doc else 0.0,
        )
    except InvariantError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"{origin}: malformed trace file ({exc})") from exc
    if "avg_flow" not in doc:
        trace.avg_flow = trace.consecutive_flow_mean()
    trace.validate()
    # keep the recomputed mean as the operative value
    trace.avg_flow = trace.consecutive_flow_mean()
    return trace


def load_trace(path: str | Path) -> MotionTrace:
    """Load and fully validate a trace file."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: trace file must contain a JSON object")
    return trace_from_dict(doc, origin=str(path))
