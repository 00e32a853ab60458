"""Per-edge energy terms and their weighted combination.

All functions here are pure over immutable inputs; the vectorized table
builders exist so the solvers stay fast on traces with millions of links.
The scalar and vectorized paths use the same floating-point expressions, so
their results are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingLink
from .trace import MISSING, FOE, SRC_CODE, ColorHistogram, MotionLink, MotionTrace

# Shakiness assigned to links with no usable motion direction (both epipole
# and integrated-flow estimation failed).  Edges stay in the graph so the
# connectivity guarantee via consecutive links is preserved.
MISSING_DIRECTION_COST = 1e6


@dataclass
class CostWeights:
    """Relative importance of the energy terms.

    ``k_flow`` is the desired aggregate flow between consecutive output
    frames; it controls playback speed.  ``alpha2`` weights the second-order
    direction-stability term and defaults to ``alpha``.
    """

    alpha: float = 1000.0
    beta: float = 200.0
    gamma: float = 3.0
    foe_penalty_c: float = 4.0
    k_flow: float = 10.0
    alpha2: float | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "k_flow"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.foe_penalty_c < 1:
            raise ValueError("foe_penalty_c must be >= 1")
        if self.alpha2 is not None and self.alpha2 < 0:
            raise ValueError("alpha2 must be non-negative")

    @property
    def effective_alpha2(self) -> float:
        return self.alpha if self.alpha2 is None else self.alpha2


@dataclass
class EdgeCost:
    """Cost breakdown of one transition.

    ``total`` always equals
    ``alpha*shakiness + beta*velocity + gamma*appearance + alpha2*smoothness``
    with the exact weights used to build it.  ``smoothness`` is zero for
    first-order transitions.
    """

    shakiness: float
    velocity: float
    appearance: float
    total: float
    smoothness: float = 0.0


def shakiness_cost(link: MotionLink, weights: CostWeights) -> float:
    """Distance of the motion-direction point from the image center.

    Estimated-FOE directions are penalized by ``foe_penalty_c``; links with
    no usable direction get the MISSING_DIRECTION_COST sentinel.
    """
    if link.direction_source == MISSING:
        return MISSING_DIRECTION_COST
    x, y = link.direction
    norm = float(np.sqrt(x * x + y * y))
    if link.direction_source == FOE:
        return norm * weights.foe_penalty_c
    return norm


def velocity_cost(link: MotionLink, weights: CostWeights) -> float:
    """Squared deviation of the aggregate flow from the desired k_flow."""
    d = link.flow_sum - weights.k_flow
    return d * d


def _as_bins(h) -> np.ndarray:
    return h.bins if isinstance(h, ColorHistogram) else np.asarray(h, dtype=np.float64)


def appearance_cost(h1, h2) -> float:
    """1-D earth mover's distance between color histograms, summed over channels.

    With unit ground distance between adjacent bins the per-channel EMD
    equals the L1 distance between the channel CDFs.  Symmetric, zero iff
    equal, and a metric on normalized histograms.
    """
    b1, b2 = _as_bins(h1), _as_bins(h2)
    c1 = np.cumsum(b1, axis=-1)
    c2 = np.cumsum(b2, axis=-1)
    return float(np.abs(c1 - c2).sum())


def edge_cost(trace: MotionTrace, i: int, j: int, weights: CostWeights,
              smoothness: float = 0.0) -> EdgeCost:
    """Full cost of the transition i -> j."""
    try:
        link = trace.links[(i, j)]
    except KeyError:
        raise MissingLink(f"{trace.video_id}: no link ({i},{j})") from None
    s = shakiness_cost(link, weights)
    v = velocity_cost(link, weights)
    c = appearance_cost(trace.histograms[i], trace.histograms[j])
    total = weights.alpha * s + weights.beta * v + weights.gamma * c
    if smoothness:
        total = total + weights.effective_alpha2 * smoothness
    return EdgeCost(shakiness=s, velocity=v, appearance=c, total=total, smoothness=smoothness)


def link_cost_arrays(trace: MotionTrace, weights: CostWeights, tau: int):
    """Per-link component arrays for all links with gap <= tau.

    Returns (src, gap, shak, vel, app, total) where ``gap = dst - src``.
    """
    ls = trace.links
    gap = ls.dst - ls.src
    keep = gap <= tau
    src = ls.src[keep]
    g = gap[keep]
    dx = ls.dx[keep]
    dy = ls.dy[keep]
    code = ls.code[keep]
    flow = ls.flow[keep]

    shak = np.sqrt(dx * dx + dy * dy)
    shak[code == SRC_CODE[FOE]] = shak[code == SRC_CODE[FOE]] * weights.foe_penalty_c
    shak[code == SRC_CODE[MISSING]] = MISSING_DIRECTION_COST

    d = flow - weights.k_flow
    vel = d * d

    cdfs = np.cumsum(trace.histograms, axis=2)
    app = np.empty(len(src), dtype=np.float64)
    block = 200_000
    dst = src + g
    for lo in range(0, len(src), block):
        hi = min(lo + block, len(src))
        app[lo:hi] = np.abs(cdfs[src[lo:hi]] - cdfs[dst[lo:hi]]).sum(axis=(1, 2))

    total = weights.alpha * shak + weights.beta * vel + weights.gamma * app
    return src, g, shak, vel, app, total


def cost_table(trace: MotionTrace, weights: CostWeights, tau: int) -> np.ndarray:
    """Dense (n, tau) matrix of edge totals; +inf where a link is absent.

    ``table[i, k-1]`` is the total cost of the transition i -> i+k.
    """
    n = trace.n
    src, g, _, _, _, total = link_cost_arrays(trace, weights, tau)
    table = np.full((n, tau), np.inf, dtype=np.float64)
    table[src, g - 1] = total
    return table


def direction_table(trace: MotionTrace, tau: int):
    """Dense (n, tau) direction-x/y arrays plus a usable-direction mask.

    ``usable[i, k-1]`` is False where the link is absent or its direction
    source is missing.
    """
    n = trace.n
    ls = trace.links
    gap = ls.dst - ls.src
    keep = gap <= tau
    src = ls.src[keep]
    g = gap[keep]
    dx = np.full((n, tau), np.nan)
    dy = np.full((n, tau), np.nan)
    usable = np.zeros((n, tau), dtype=bool)
    dx[src, g - 1] = ls.dx[keep]
    dy[src, g - 1] = ls.dy[keep]
    usable[src, g - 1] = ls.code[keep] != SRC_CODE[MISSING]
    return dx, dy, usable
