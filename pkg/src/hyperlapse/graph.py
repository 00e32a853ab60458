"""Sampling-graph parameters and the plan type shared by every solver."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .costs import CostWeights, EdgeCost
from .errors import InvariantError


@dataclass
class GraphSpec:
    """Parameters of a frame-sampling graph.

    ``tau`` is the maximum allowed frame skip.  The source connects with zero
    weight to the first ``d_start`` frames and the last ``d_end`` frames
    connect with zero weight to the sink, so a plan may drop frames at either
    end of the video.
    """

    n: int
    tau: int
    d_start: int = 120
    d_end: int = 120
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        if not (1 <= self.tau < self.n):
            raise ValueError(f"tau must satisfy 1 <= tau < n (got tau={self.tau}, n={self.n})")
        if not (1 <= self.d_start <= self.n):
            raise ValueError("d_start must be in [1, n]")
        if not (1 <= self.d_end <= self.n):
            raise ValueError("d_end must be in [1, n]")


@dataclass
class SamplingPlan:
    """Ordered frame selection with its per-transition cost breakdown."""

    video_id: str
    selected: list[int]
    transition_costs: list[EdgeCost] | None
    total_cost: float
    solver: str

    def gaps(self) -> list[int]:
        return [b - a for a, b in zip(self.selected, self.selected[1:])]

    def validate(self, spec: GraphSpec) -> None:
        sel = self.selected
        if not sel:
            raise InvariantError(f"{self.video_id}: empty plan")
        if any(b <= a for a, b in zip(sel, sel[1:])):
            raise InvariantError(f"{self.video_id}: selected indices not strictly increasing")
        if any(g > spec.tau for g in self.gaps()):
            raise InvariantError(f"{self.video_id}: plan violates the max skip {spec.tau}")
        if sel[0] >= spec.d_start:
            raise InvariantError(
                f"{self.video_id}: plan starts at {sel[0]}, outside the start window {spec.d_start}"
            )
        if sel[-1] < spec.n - spec.d_end:
            raise InvariantError(
                f"{self.video_id}: plan ends at {sel[-1]}, outside the end window {spec.d_end}"
            )
        if self.transition_costs is not None:
            if len(self.transition_costs) != len(sel) - 1:
                raise InvariantError(f"{self.video_id}: transition count mismatch")
            s = sum(t.total for t in self.transition_costs)
            if abs(s - self.total_cost) > 1e-9 * max(1.0, abs(s)):
                raise InvariantError(
                    f"{self.video_id}: total_cost {self.total_cost!r} != sum of transitions {s!r}"
                )

    def to_dict(self) -> dict:
        out = {
            "video_id": self.video_id,
            "solver": self.solver,
            "selected": list(self.selected),
            "total_cost": self.total_cost,
        }
        if self.transition_costs is not None:
            out["transitions"] = [
                {
                    "i": a,
                    "j": b,
                    "shakiness": t.shakiness,
                    "velocity": t.velocity,
                    "appearance": t.appearance,
                    "smoothness": t.smoothness,
                    "total": t.total,
                }
                for (a, b), t in zip(
                    zip(self.selected, self.selected[1:]), self.transition_costs
                )
            ]
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")


def plan_from_dict(doc: dict) -> SamplingPlan:
    transitions = None
    if "transitions" in doc:
        transitions = [
            EdgeCost(
                shakiness=t["shakiness"],
                velocity=t["velocity"],
                appearance=t["appearance"],
                total=t["total"],
                smoothness=t.get("smoothness", 0.0),
            )
            for t in doc["transitions"]
        ]
    return SamplingPlan(
        video_id=doc["video_id"],
        selected=[int(s) for s in doc["selected"]],
        transition_costs=transitions,
        total_cost=float(doc["total_cost"]),
        solver=doc.get("solver", "dag_dp"),
    )


def load_plan(path: str | Path) -> SamplingPlan:
    return plan_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
