"""Hyperlapse planning engine.

Turns per-frame motion traces of egocentric video into executable sampling
and panorama-composition plans by shortest-path energy minimization, plus the
metrics to evaluate them.
"""

from .costs import (
    MISSING_DIRECTION_COST,
    CostWeights,
    EdgeCost,
    appearance_cost,
    edge_cost,
    shakiness_cost,
    velocity_cost,
)
from .errors import (
    EmptyCoverage,
    HyperlapseError,
    InvariantError,
    MiddleFrameMismatch,
    MissingLink,
    NoPath,
    ParseError,
    TrackingLost,
)
from .evaluate import EvalReport, epipole_jitter, eval_panorama_plan, eval_plan
from .first_order import solve_first_order, uniform_plan
from .graph import GraphSpec, SamplingPlan, load_plan
from .multi import (
    CorrespondenceTable,
    Match,
    build_multi_candidates,
    finalize_correspondence,
    plan_multi,
    solve_multi_sampling,
)
from .panorama import (
    DisplacementTrack,
    PanoramaCandidate,
    PanoramaPlan,
    RigidTransform,
    align_rigid,
    build_candidate,
    plan_panoramas,
    select_central_frames,
    solve_crop_path,
    solve_panorama_sampling,
)
from .second_order import second_order_cost, solve_second_order
from .trace import (
    ColorHistogram,
    FrameMeta,
    HomographyLink,
    MotionLink,
    MotionTrace,
    load_trace,
    normalize_direction,
    save_trace,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
