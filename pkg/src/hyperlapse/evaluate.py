"""Plan-quality metrics.

The effective speedup of a plan is its median frame skip; stability is the
mean magnitude of the temporal derivative of the motion-direction point
(epipole/FOE) along the plan's transitions, compared against a uniform
baseline at the requested speedup.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .first_order import uniform_plan
from .graph import SamplingPlan
from .panorama import PanoramaPlan
from .trace import MISSING, MotionTrace

# regime flags
LOW_FLOW_HIGH_SPIKE = "low_flow_high_spike"
NO_JITTER_IMPROVEMENT = "no_jitter_improvement"


@dataclass
class EvalReport:
    median_skip: int
    jitter_mean: float
    jitter_baseline: float
    jitter_improvement_pct: float
    flags: list[str] = field(default_factory=list)
    fov_ratio_pct: float | None = None
    runtime_ms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        imp = self.jitter_improvement_pct
        metrics = {
            "median_skip": self.median_skip,
            "jitter_mean": self.jitter_mean,
            "jitter_baseline": self.jitter_baseline,
            "jitter_improvement_pct": "inf" if math.isinf(imp) else imp,
            "flags": list(self.flags),
        }
        if self.fov_ratio_pct is not None:
            metrics["fov_ratio_pct"] = self.fov_ratio_pct
        return {"metrics": metrics, "runtime_ms": dict(self.runtime_ms)}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")


def transition_directions(trace: MotionTrace, selected: list[int]) -> np.ndarray:
    """Motion directions of the plan's transitions; rows are NaN where the
    link is absent or has no usable direction."""
    out = np.full((max(len(selected) - 1, 0), 2), np.nan)
    for k, (a, b) in enumerate(zip(selected, selected[1:])):
        try:
            link = trace.links[(a, b)]
        except KeyError:
            continue
        if link.direction_source != MISSING:
            out[k] = link.direction
    return out


def epipole_jitter(trace: MotionTrace, selected: list[int]) -> float:
    """Mean magnitude of the temporal derivative of the motion direction."""
    dirs = transition_directions(trace, selected)
    if len(dirs) < 2:
        return 0.0
    d = np.diff(dirs, axis=0)
    norms = np.linalg.norm(d, axis=1)
    norms = norms[~np.isnan(norms)]
    if len(norms) == 0:
        return 0.0
    return float(norms.mean())


def improvement_pct(jitter_baseline: float, jitter_plan: float,
                    denominator: str = "plan") -> float:
    """Percentage jitter improvement of a plan over the baseline.

    With the default plan denominator, +283% means the baseline jitters 3.83
    times as much as the plan.  A perfectly stable plan against a shaky
    baseline yields +inf.
    """
    denom = jitter_plan if denominator == "plan" else jitter_baseline
    if denom == 0.0:
        if jitter_baseline == jitter_plan:
            return 0.0
        return math.inf if jitter_baseline > jitter_plan else -math.inf
    return 100.0 * (jitter_baseline - jitter_plan) / denom


def regime_flags(trace: MotionTrace, improvement: float) -> list[str]:
    """Flags for regimes where the velocity term is known to misbehave."""
    flags = []
    consec = trace.links.flow[trace.links.dst - trace.links.src == 1]
    if len(consec):
        mean = float(consec.mean())
        med = float(np.median(consec))
        if mean > 0 and med < 0.25 * mean:
            flags.append(LOW_FLOW_HIGH_SPIKE)
    if improvement <= 0:
        flags.append(NO_JITTER_IMPROVEMENT)
    return flags


def eval_plan(trace: MotionTrace, plan: SamplingPlan, baseline_skip: int,
              improvement_denominator: str = "plan") -> EvalReport:
    """Metrics of a sampling plan against the uniform baseline at the same
    nominal speedup."""
    gaps = plan.gaps()
    median_skip = int(statistics.median_low(gaps)) if gaps else 1
    jp = epipole_jitter(trace, plan.selected)
    baseline = uniform_plan(trace.n, baseline_skip, 0)
    ju = epipole_jitter(trace, baseline.selected)
    imp = improvement_pct(ju, jp, improvement_denominator)
    return EvalReport(
        median_skip=median_skip,
        jitter_mean=jp,
        jitter_baseline=ju,
        jitter_improvement_pct=imp,
        flags=regime_flags(trace, imp),
    )


def eval_panorama_plan(trace: MotionTrace, plan: PanoramaPlan, baseline_skip: int,
                       improvement_denominator: str = "plan") -> EvalReport:
    """Metrics of a panorama plan: the selected central frames act as the
    sampled sequence, and the crop-to-input area ratio is reported."""
    centers = [plan.candidates[i].center for i in plan.selected]
    gaps = [b - a for a, b in zip(centers, centers[1:])]
    median_skip = int(statistics.median_low(gaps)) if gaps else 1
    jp = epipole_jitter(trace, centers)
    baseline = uniform_plan(trace.n, baseline_skip, 0)
    ju = epipole_jitter(trace, baseline.selected)
    imp = improvement_pct(ju, jp, improvement_denominator)
    frame_area = float(trace.width * trace.height)
    seg_len = [s1 - s0 for s0, s1 in plan.segments]
    areas = [w * h for w, h in plan.crop_sizes]
    mean_area = float(np.average(areas, weights=seg_len))
    return EvalReport(
        median_skip=median_skip,
        jitter_mean=jp,
        jitter_baseline=ju,
        jitter_improvement_pct=imp,
        flags=regime_flags(trace, imp),
        fov_ratio_pct=100.0 * mean_area / frame_area,
    )


def epipole_csv(trace: MotionTrace, plan: SamplingPlan, baseline_skip: int) -> str:
    """Plot-ready CSV of the motion-direction traces of the plan and the
    uniform baseline."""
    lines = ["kind,step,src,dst,x,y"]
    for kind, selected in (
        ("plan", plan.selected),
        ("uniform", uniform_plan(trace.n, baseline_skip, 0).selected),
    ):
        dirs = transition_directions(trace, selected)
        for k, (a, b) in enumerate(zip(selected, selected[1:])):
            x, y = dirs[k]
            sx = "" if np.isnan(x) else f"{x:.9g}"
            sy = "" if np.isnan(y) else f"{y:.9g}"
            lines.append(f"{kind},{k},{a},{b},{sx},{sy}")
    return "\n".join(lines) + "\n"
