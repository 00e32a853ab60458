"""Command-line front end.

Subcommands: ``sample`` (first-order), ``sample2`` (second-order), ``pano``
(single-video panorama plan), ``multi`` (multi-video panorama plan), ``eval``
(plan metrics) and ``synth`` (deterministic synthetic traces).

Exit codes: 0 success, 1 invalid flags, 2 data/invariant failures.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .costs import CostWeights
from .errors import HyperlapseError
from .evaluate import eval_panorama_plan, eval_plan, epipole_csv
from .first_order import solve_first_order
from .graph import GraphSpec, load_plan
from .multi import load_correspondence, plan_multi, save_raw_correspondence
from .panorama import plan_panoramas
from .second_order import solve_second_order
from .synth import (
    make_driving_trace,
    make_oscillating_trace,
    make_pair_traces,
    make_random_trace,
)
from .trace import load_trace, save_trace


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_sampler_flags(p, alpha=1000.0, beta=200.0, gamma=3.0):
    p.add_argument("--trace", required=True, help="trace JSON file")
    p.add_argument("--out", help="output file (plan or report JSON)")
    p.add_argument("--speedup", type=float, default=10.0,
                   help="desired speedup; k_flow = speedup * average flow")
    p.add_argument("--kflow", type=float, default=None,
                   help="explicit k_flow (overrides --speedup)")
    p.add_argument("--tau", type=int, default=100, help="maximum frame skip")
    p.add_argument("--dstart", type=int, default=120, help="start skip window")
    p.add_argument("--dend", type=int, default=120, help="end skip window")
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--beta", type=float, default=beta)
    p.add_argument("--gamma", type=float, default=gamma)
    p.add_argument("--c", type=float, default=4.0, help="estimated-FOE penalty factor")
    p.add_argument("--solver", choices=["dag", "dijkstra"], default="dag")


def build_parser() -> _Parser:
    parser = _Parser(prog="hyperlapse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[], help="first-order frame sampling")
    _add_sampler_flags(p)
    p.add_argument("--alpha2", type=float, default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("sample2", help="second-order frame sampling")
    _add_sampler_flags(p)
    p.add_argument("--alpha2", type=float, default=None,
                   help="weight of the direction-stability term (defaults to --alpha)")

    p = sub.add_parser("pano", help="single-video panorama plan")
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    p.add_argument("--speedup", type=float, default=10.0)
    p.add_argument("--kflow", type=float, default=None)
    p.add_argument("--tau", type=int, default=100)
    p.add_argument("--dstart", type=int, default=120)
    p.add_argument("--dend", type=int, default=120)
    p.add_argument("--alpha", type=float, default=1e7)
    p.add_argument("--beta", type=float, default=5e6)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--c", type=float, default=4.0)
    p.add_argument("--omega", type=int, default=50, help="panorama window length")
    p.add_argument("--lambda", dest="lam", type=float, default=15.0,
                   help="crop-path smoothness weight")
    p.add_argument("--fov-sign", choices=["deficit", "literal"], default="deficit")

    p = sub.add_parser("multi", help="multi-video panorama plan")
    p.add_argument("--trace", action="append", required=True,
                   help="trace JSON file (repeat per video)")
    p.add_argument("--corr", action="append", default=[],
                   help="raw correspondence JSON file (repeatable)")
    p.add_argument("--out")
    p.add_argument("--speedup", type=float, default=10.0)
    p.add_argument("--kflow", type=float, default=None)
    p.add_argument("--tau", type=int, default=100)
    p.add_argument("--dstart", type=int, default=120)
    p.add_argument("--dend", type=int, default=120)
    p.add_argument("--alpha", type=float, default=1e7)
    p.add_argument("--beta", type=float, default=5e6)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--c", type=float, default=4.0)
    p.add_argument("--omega", type=int, default=50)
    p.add_argument("--lambda", dest="lam", type=float, default=15.0)
    p.add_argument("--cross-mult", type=float, default=2.0,
                   help="cross-video switching penalty multiplier")
    p.add_argument("--fov-sign", choices=["deficit", "literal"], default="deficit")
    p.add_argument("--timeline", choices=["auto", "timestamp", "correspondence"],
                   default="auto")

    p = sub.add_parser("eval", help="plan metrics vs the uniform baseline")
    p.add_argument("--trace", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--speedup", type=float, default=10.0, help="baseline skip")
    p.add_argument("--out")
    p.add_argument("--csv", help="write motion-direction traces as CSV")
    p.add_argument("--improvement-denominator", choices=["plan", "baseline"],
                   default="plan")

    p = sub.add_parser("synth", help="emit deterministic synthetic traces")
    p.add_argument("--kind", choices=["oscillate", "drive", "random", "pair"],
                   required=True)
    p.add_argument("--out", required=True,
                   help="output trace file; for --kind pair, a path prefix")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--period", type=int, default=10)
    p.add_argument("--phase", type=int, default=None)
    p.add_argument("--tau", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--flick-every", type=int, default=60)
    p.add_argument("--delta", type=int, default=40, help="frame offset for --kind pair")
    return parser


def _weights(args, avg_flow: float) -> CostWeights:
    k = args.kflow if args.kflow is not None else args.speedup * avg_flow
    alpha2 = getattr(args, "alpha2", None)
    return CostWeights(alpha=args.alpha, beta=args.beta, gamma=args.gamma,
                       foe_penalty_c=args.c, k_flow=k, alpha2=alpha2)


def _default_out(args, suffix: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(args.trace if isinstance(args.trace, str) else args.trace[0]).with_suffix(suffix)


def _run_sampler(args, second_order: bool) -> int:
    t0 = time.perf_counter()
    trace = load_trace(args.trace)
    t1 = time.perf_counter()
    weights = _weights(args, trace.avg_flow)
    spec = GraphSpec(n=trace.n, tau=args.tau, d_start=args.dstart, d_end=args.dend,
                     weights=weights)
    solver = "dag_dp" if args.solver == "dag" else "dijkstra"
    solve = solve_second_order if second_order else solve_first_order
    plan = solve(trace, spec, solver=solver)
    t2 = time.perf_counter()
    out = _default_out(args, ".plan.json")
    plan.save(out)
    print(
        f"{trace.video_id}: {len(plan.selected)} frames selected, "
        f"total cost {plan.total_cost:.6g}, load {1000*(t1-t0):.0f} ms, "
        f"solve {1000*(t2-t1):.0f} ms -> {out}"
    )
    return 0


def _run_pano(args) -> int:
    trace = load_trace(args.trace)
    weights = _weights(args, trace.avg_flow)
    plan = plan_panoramas(
        trace, omega=args.omega, weights=weights, lam=args.lam, tau=args.tau,
        d_start=args.dstart, d_end=args.dend, fov_sign=args.fov_sign.replace("-", "_"),
    )
    out = _default_out(args, ".pano.json")
    plan.save(out)
    crop_w, crop_h = plan.min_crop()
    print(
        f"{trace.video_id}: {len(plan.selected)}/{len(plan.candidates)} panoramas, "
        f"crop {crop_w:.0f}x{crop_h:.0f} -> {out}"
    )
    return 0


def _run_multi(args) -> int:
    traces = [load_trace(p) for p in args.trace]
    table = load_correspondence(args.corr)
    weights = _weights(args, traces[0].avg_flow)
    plan = plan_multi(
        traces, table, omega=args.omega, weights=weights, lam=args.lam,
        tau=args.tau, d_start=args.dstart, d_end=args.dend,
        cross_mult=args.cross_mult, fov_sign=args.fov_sign, timeline=args.timeline,
    )
    out = Path(args.out) if args.out else Path(args.trace[0]).with_suffix(".multi.json")
    plan.save(out)
    print(f"{plan.video_id}: {len(plan.selected)} panoramas -> {out}")
    return 0


def _run_eval(args) -> int:
    import json

    t0 = time.perf_counter()
    trace = load_trace(args.trace)
    doc = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    t1 = time.perf_counter()
    baseline_skip = max(1, round(args.speedup))
    if "panoramas" in doc:
        from .panorama import PanoramaCandidate, PanoramaPlan, RigidTransform

        candidates = [
            PanoramaCandidate(ident=k, video_id=p.get("video", trace.video_id),
                              center=p["center"], members=p["members"], warps={})
            for k, p in enumerate(doc["panoramas"])
        ]
        for c, p in zip(candidates, doc["panoramas"]):
            c.fov_pixels = p["fov"]
        plan = PanoramaPlan(
            video_id=trace.video_id,
            candidates=candidates,
            selected=doc["selected"],
            alignment=[RigidTransform(**a) for a in doc["alignment"]],
            crop_centers=[(c["cx"], c["cy"]) for c in doc["crop"]],
            segments=[tuple(s) for s in doc.get("segments", [[0, len(doc["selected"])]])],
            crop_sizes=[tuple(s) for s in doc.get("crop_sizes", [[doc["crop_w"], doc["crop_h"]]])],
            total_cost=doc.get("total_cost", 0.0),
        )
        report = eval_panorama_plan(trace, plan, baseline_skip,
                                    args.improvement_denominator)
        selected_frames = [candidates[i].center for i in plan.selected]
    else:
        plan = load_plan(args.plan)
        report = eval_plan(trace, plan, baseline_skip, args.improvement_denominator)
        selected_frames = plan.selected
    t2 = time.perf_counter()
    report.runtime_ms = {"load": 1000 * (t1 - t0), "eval": 1000 * (t2 - t1)}
    out = Path(args.out) if args.out else Path(args.plan).with_suffix(".report.json")
    report.save(out)
    if args.csv:
        from .graph import SamplingPlan

        csv_plan = SamplingPlan(trace.video_id, selected_frames, None, 0.0, "eval")
        Path(args.csv).write_text(epipole_csv(trace, csv_plan, baseline_skip),
                                  encoding="utf-8")
    imp = report.jitter_improvement_pct
    print(
        f"median skip {report.median_skip}, jitter {report.jitter_mean:.6g} "
        f"(baseline {report.jitter_baseline:.6g}), improvement "
        f"{'inf' if imp == float('inf') else f'{imp:.1f}'}%"
        + (f", flags: {','.join(report.flags)}" if report.flags else "")
        + f" -> {out}"
    )
    return 0


def _run_synth(args) -> int:
    if args.kind == "pair":
        a, b, raw = make_pair_traces(n=args.n, delta=args.delta, seed=args.seed,
                                     tau=args.tau, period=args.period)
        prefix = args.out
        save_trace(a, f"{prefix}_a.json")
        save_trace(b, f"{prefix}_b.json")
        ((pa, pb), matches), = raw.items()
        save_raw_correspondence(pa, pb, matches, f"{prefix}_ab.json")
        print(f"wrote {prefix}_a.json, {prefix}_b.json, {prefix}_ab.json")
        return 0
    if args.kind == "oscillate":
        trace = make_oscillating_trace(n=args.n, period=args.period, seed=args.seed,
                                       phase=args.phase, tau=args.tau)
    elif args.kind == "drive":
        trace = make_driving_trace(n=args.n, seed=args.seed,
                                   flick_every=args.flick_every, tau=args.tau)
    else:
        trace = make_random_trace(n=args.n, tau=args.tau, seed=args.seed)
    save_trace(trace, args.out)
    print(f"wrote {args.out} ({trace.n} frames, {len(trace.links)} links)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sample":
            return _run_sampler(args, second_order=False)
        if args.command == "sample2":
            return _run_sampler(args, second_order=True)
        if args.command == "pano":
            return _run_pano(args)
        if args.command == "multi":
            return _run_multi(args)
        if args.command == "eval":
            return _run_eval(args)
        if args.command == "synth":
            return _run_synth(args)
    except HyperlapseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except ValueError as exc:  # bad parameter combinations (e.g. tau >= n)
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 1  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
