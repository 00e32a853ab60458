"""First-order frame sampling: minimum-cost path over single-frame nodes.

Two solvers are provided.  ``dag_dp`` relaxes nodes in reverse index order
(edges only point forward, so that is a topological order) and is the
default; ``dijkstra`` runs a heap-based search on the reversed graph.  Both
produce the same cost-to-sink array bit-for-bit, and share the greedy path
reconstruction, so they return identical plans.

Ties between minimum-cost paths are broken toward the lexicographically
smallest index sequence; a plan that can stop at the sink at no extra cost
stops (a proper prefix precedes its extensions).
"""

from __future__ import annotations

import heapq

import numpy as np

from .costs import CostWeights, cost_table, edge_cost
from .errors import MissingLink, NoPath
from .graph import GraphSpec, SamplingPlan
from .trace import MotionTrace

SOLVERS = ("dag_dp", "dijkstra")


def _cost_to_sink_dp(table: np.ndarray, n: int, tau: int, d_end: int) -> np.ndarray:
    best = np.full(n, np.inf)
    sink_from = n - d_end
    for i in range(n - 1, -1, -1):
        m = min(tau, n - 1 - i)
        b = np.inf
        if m > 0:
            b = float(np.min(table[i, :m] + best[i + 1 : i + 1 + m]))
        if i >= sink_from:
            b = min(b, 0.0)
        best[i] = b
    return best


def _cost_to_sink_dijkstra(table: np.ndarray, n: int, tau: int, d_end: int) -> np.ndarray:
    # Shortest distance from each node to the sink == Dijkstra from the sink
    # over reversed edges.  Predecessors of node j in the original graph are
    # i in [j - tau, j).
    best = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    heap = [(0.0, i) for i in range(n - d_end, n)]
    heapq.heapify(heap)
    for i in range(n - d_end, n):
        best[i] = 0.0
    while heap:
        d, j = heapq.heappop(heap)
        if done[j] or d > best[j]:
            continue
        done[j] = True
        lo = max(0, j - tau)
        for i in range(lo, j):
            w = table[i, j - i - 1]
            if not np.isfinite(w):
                continue
            cand = w + best[j]
            if cand < best[i]:
                best[i] = cand
                heapq.heappush(heap, (cand, i))
    return best


def _reconstruct(table: np.ndarray, best: np.ndarray, n: int, tau: int,
                 d_start: int, d_end: int) -> list[int]:
    starts = [f for f in range(d_start) if np.isfinite(best[f])]
    if not starts:
        raise NoPath("no start frame can reach the sink")
    total = min(best[f] for f in starts)
    cur = next(f for f in starts if best[f] == total)
    path = [cur]
    sink_from = n - d_end
    while True:
        if cur >= sink_from and best[cur] == 0.0:
            return path
        m = min(tau, n - 1 - cur)
        nxt = None
        for k in range(1, m + 1):
            if table[cur, k - 1] + best[cur + k] == best[cur]:
                nxt = cur + k
                break
        if nxt is None:  # pragma: no cover - best[] was built from these sums
            raise NoPath(f"reconstruction lost at frame {cur}")
        path.append(nxt)
        cur = nxt


def solve_first_order(trace: MotionTrace, spec: GraphSpec,
                      solver: str = "dag_dp") -> SamplingPlan:
    """Globally minimal-cost frame sequence under the GraphSpec constraints."""
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    n = spec.n
    table = cost_table(trace, spec.weights, spec.tau)
    if solver == "dijkstra":
        best = _cost_to_sink_dijkstra(table, n, spec.tau, spec.d_end)
    else:
        best = _cost_to_sink_dp(table, n, spec.tau, spec.d_end)
    # With all consecutive links present every node reaches the sink.
    assert np.isfinite(best[:spec.d_start]).any(), "sampling graph is disconnected"
    selected = _reconstruct(table, best, n, spec.tau, spec.d_start, spec.d_end)
    transitions = [
        edge_cost(trace, a, b, spec.weights) for a, b in zip(selected, selected[1:])
    ]
    total = sum(t.total for t in transitions)
    plan = SamplingPlan(
        video_id=trace.video_id,
        selected=selected,
        transition_costs=transitions,
        total_cost=total,
        solver=solver,
    )
    plan.validate(spec)
    return plan


def uniform_plan(n: int, skip: int, offset: int = 0,
                 trace: MotionTrace | None = None,
                 weights: CostWeights | None = None) -> SamplingPlan:
    """Fixed-step baseline sampling: offset, offset+skip, ...

    Transition costs are filled from the trace when one is supplied (links
    may be absent for large skips, in which case costs stay None).
    """
    if skip < 1:
        raise ValueError("skip must be >= 1")
    if not (0 <= offset < n):
        raise ValueError("offset must be in [0, n)")
    selected = list(range(offset, n, skip))
    transitions = None
    total = 0.0
    if trace is not None and weights is not None:
        try:
            transitions = [
                edge_cost(trace, a, b, weights) for a, b in zip(selected, selected[1:])
            ]
            total = sum(t.total for t in transitions)
        except MissingLink:
            transitions = None
            total = 0.0
    return SamplingPlan(
        video_id=trace.video_id if trace is not None else "",
        selected=selected,
        transition_costs=transitions,
        total_cost=total,
        solver="uniform",
    )
