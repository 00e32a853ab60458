"""Extractor/renderer command line.

Subcommands: ``extract`` (video -> trace JSON), ``corr`` (two videos -> raw
correspondence JSON), ``render`` (plan -> frames), ``synthvid`` (synthetic
clips with known ego-motion).  Flag names mirror the planner CLI where the
meanings overlap.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExtractionConfig
from .extract import extract_trace, find_correspondences, save_correspondence, save_trace_doc
from .render import MissingFrame, render_plan
from .synthetic import (
    forward_translation_clip,
    oscillating_clip,
    rotation_clip,
    static_clip,
)
from .video_io import read_frames, write_frames, write_video


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="hyperlapse-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract a motion trace from a video")
    p.add_argument("--video", required=True, help="video file or image directory")
    p.add_argument("--out", required=True, help="trace JSON path")
    p.add_argument("--video-id", default=None)
    p.add_argument("--tau", type=int, default=20)
    p.add_argument("--grid", type=int, default=16, help="sparse-flow grid spacing (px)")
    p.add_argument("--features", type=int, default=500)
    p.add_argument("--focal", type=float, default=None,
                   help="calibrated focal length in px (enables the essential route)")
    p.add_argument("--ransac", type=float, default=1.0)
    p.add_argument("--foe-grid", type=int, default=24)
    p.add_argument("--lens", default="none", help="lens-distortion profile id")
    p.add_argument("--max-frames", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("corr", help="raw cross-video correspondences")
    p.add_argument("--video-a", required=True)
    p.add_argument("--video-b", required=True)
    p.add_argument("--id-a", default="a")
    p.add_argument("--id-b", default="b")
    p.add_argument("--out", required=True)
    p.add_argument("--coarse-skip", type=int, default=10)
    p.add_argument("--refine-radius", type=int, default=9)
    p.add_argument("--max-frames", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("render", help="execute a plan into frames")
    p.add_argument("--video", action="append", required=True,
                   help="VIDEO_ID=PATH, or just PATH for a single video")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True, help="output directory or .avi path")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--max-frames", type=int, default=None)

    p = sub.add_parser("synthvid", help="write a synthetic clip")
    p.add_argument("--kind", choices=["forward", "rotate", "static", "oscillate"],
                   required=True)
    p.add_argument("--out", required=True, help="output image directory")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--step", type=float, default=0.12)
    return parser


def _config(args) -> ExtractionConfig:
    return ExtractionConfig(
        tau=args.tau,
        grid_spacing=args.grid,
        max_features=args.features,
        focal_px=args.focal,
        ransac_thresh_px=args.ransac,
        foe_grid=args.foe_grid,
        lens_profile=args.lens,
        seed=args.seed,
    )


def _run_extract(args) -> int:
    frames, fps = read_frames(args.video, args.max_frames)
    cfg = _config(args)
    video_id = args.video_id or Path(args.video).stem
    doc = extract_trace(frames, fps, cfg, video_id)
    save_trace_doc(doc, args.out, config=cfg)
    print(f"{video_id}: {len(frames)} frames, {len(doc['links'])} links -> {args.out}")
    return 0


def _run_corr(args) -> int:
    frames_a, _ = read_frames(args.video_a, args.max_frames)
    frames_b, _ = read_frames(args.video_b, args.max_frames)
    cfg = ExtractionConfig(coarse_skip=args.coarse_skip,
                           refine_radius=args.refine_radius, seed=args.seed)
    matches = find_correspondences(frames_a, frames_b, cfg)
    save_correspondence(args.id_a, args.id_b, matches, args.out)
    print(f"{args.id_a}->{args.id_b}: {len(matches)} candidate matches -> {args.out}")
    return 0


def _run_render(args) -> int:
    frames_by_video = {}
    default = None
    for spec in args.video:
        if "=" in spec:
            vid, path = spec.split("=", 1)
        else:
            vid, path = Path(spec).stem, spec
        frames_by_video[vid], _ = read_frames(path, args.max_frames)
        default = default or vid
    result = render_plan(frames_by_video, args.plan, default)
    out = Path(args.out)
    if out.suffix.lower() == ".avi":
        write_video(result.frames, out, args.fps)
    else:
        write_frames(result.frames, out)
    worst = min(result.coverage) if result.coverage else 1.0
    print(f"{len(result.frames)} frames rendered (min crop coverage "
          f"{100 * worst:.1f}%) -> {out}")
    return 0


def _run_synthvid(args) -> int:
    maker = {
        "forward": lambda: forward_translation_clip(n=args.n, seed=args.seed,
                                                    step=args.step),
        "rotate": lambda: rotation_clip(n=args.n, seed=args.seed),
        "static": lambda: static_clip(n=args.n, seed=args.seed),
        "oscillate": lambda: oscillating_clip(n=args.n, seed=args.seed,
                                              step=args.step),
    }[args.kind]
    frames = maker()
    write_frames(frames, args.out)
    print(f"{args.kind}: {len(frames)} frames -> {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            return _run_extract(args)
        if args.command == "corr":
            return _run_corr(args)
        if args.command == "render":
            return _run_render(args)
        if args.command == "synthvid":
            return _run_synthvid(args)
    except MissingFrame as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (FileNotFoundError, IOError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 1  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
