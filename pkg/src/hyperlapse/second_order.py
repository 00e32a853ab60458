"""Second-order frame sampling over frame-pair nodes.

Nodes are frame pairs (i, j) with 0 < j-i <= tau; an edge (i, j) -> (j, l)
charges the first-order cost of j -> l plus a direction-stability term: the
distance between the motion directions of (i, j) and (j, l), weighted by
``alpha2``.  The source attaches to pairs starting inside the start window
and carries that pair's first-order cost; pairs ending inside the end window
attach to the sink at zero weight, mirroring the first-order layout.
"""

from __future__ import annotations

import heapq

import numpy as np

from .costs import MISSING_DIRECTION_COST, cost_table, direction_table, edge_cost
from .errors import MiddleFrameMismatch, NoPath
from .graph import GraphSpec, SamplingPlan
from .trace import MISSING, MotionLink, MotionTrace


def second_order_cost(link_ij: MotionLink, link_jl: MotionLink) -> float:
    """Euclidean distance between the motion directions of two chained links."""
    if link_ij.dst != link_jl.src:
        raise MiddleFrameMismatch(
            f"links ({link_ij.src},{link_ij.dst}) and ({link_jl.src},{link_jl.dst}) "
            "do not share a middle frame"
        )
    if link_ij.direction_source == MISSING or link_jl.direction_source == MISSING:
        return MISSING_DIRECTION_COST
    ax, ay = link_ij.direction
    bx, by = link_jl.direction
    dx = bx - ax
    dy = by - ay
    return float(np.sqrt(dx * dx + dy * dy))


def _pair_cost_to_sink(table, dx, dy, usable, n, tau, d_end, alpha2):
    """cost_to_sink[i, k-1] for pair (i, i+k), filled in decreasing i order."""
    D = np.full((n, tau), np.inf)
    base = np.full((n, tau), np.inf)  # table[j] + D[j], cached once row j is final
    base_ready = np.zeros(n, dtype=bool)
    sink_from = n - d_end
    for i in range(n - 1, -1, -1):
        mmax = min(tau, n - 1 - i)
        for k in range(1, mmax + 1):
            j = i + k
            if not np.isfinite(table[i, k - 1]):
                continue
            b = np.inf
            m = min(tau, n - 1 - j)
            if m > 0:
                if not base_ready[j]:
                    base[j, :m] = table[j, :m] + D[j, :m]
                    base_ready[j] = True
                if usable[i, k - 1]:
                    ddx = dx[j, :m] - dx[i, k - 1]
                    ddy = dy[j, :m] - dy[i, k - 1]
                    so = np.sqrt(ddx * ddx + ddy * ddy)
                    so[~usable[j, :m]] = MISSING_DIRECTION_COST
                else:
                    so = np.full(m, MISSING_DIRECTION_COST)
                b = float(np.min(base[j, :m] + alpha2 * so))
            if j >= sink_from:
                b = min(b, 0.0)
            D[i, k - 1] = b
    return D


def _so_scalar(dx, dy, usable, i, k, j, l):
    if not (usable[i, k - 1] and usable[j, l - 1]):
        return MISSING_DIRECTION_COST
    ddx = dx[j, l - 1] - dx[i, k - 1]
    ddy = dy[j, l - 1] - dy[i, k - 1]
    return np.sqrt(ddx * ddx + ddy * ddy)


def _reconstruct_pairs(table, D, dx, dy, usable, n, tau, d_start, d_end, alpha2):
    # source edge to pair (i, j) carries the pair's first-order cost
    best = np.inf
    start = None
    for i in range(d_start):
        mmax = min(tau, n - 1 - i)
        for k in range(1, mmax + 1):
            w = table[i, k - 1]
            if not np.isfinite(w):
                continue
            cand = w + D[i, k - 1]
            if cand < best:
                best = cand
                start = (i, k)
    if start is None:
        raise NoPath("no pair starting inside the start window reaches the sink")
    i, k = start
    path = [i, i + k]
    smooth = [0.0]
    sink_from = n - d_end
    while True:
        j = i + k
        if j >= sink_from and D[i, k - 1] == 0.0:
            return path, smooth
        m = min(tau, n - 1 - j)
        nxt = None
        for l in range(1, m + 1):
            w = table[j, l - 1]
            if not np.isfinite(w):
                continue
            so = _so_scalar(dx, dy, usable, i, k, j, l)
            # same float association the DP used: (w + D) + alpha2*so
            if (w + D[j, l - 1]) + alpha2 * so == D[i, k - 1]:
                nxt = l
                break
        if nxt is None:  # pragma: no cover
            raise NoPath(f"reconstruction lost at pair ({i},{j})")
        smooth.append(float(_so_scalar(dx, dy, usable, i, k, j, nxt)))
        path.append(j + nxt)
        i, k = j, nxt


def _pair_cost_to_sink_dijkstra(table, dx, dy, usable, n, tau, d_end, alpha2):
    """Heap-based variant over the reversed pair graph; same values as the DP."""
    D = np.full((n, tau), np.inf)
    sink_from = n - d_end
    heap = []
    for i in range(n):
        for k in range(1, min(tau, n - 1 - i) + 1):
            if i + k >= sink_from and np.isfinite(table[i, k - 1]):
                D[i, k - 1] = 0.0
                heap.append((0.0, i, k))
    heapq.heapify(heap)
    done = np.zeros((n, tau), dtype=bool)
    while heap:
        d, j, l = heapq.heappop(heap)
        if done[j, l - 1] or d > D[j, l - 1]:
            continue
        done[j, l - 1] = True
        # predecessors: pairs (i, k) with i + k == j
        w_jl = table[j, l - 1]
        if not np.isfinite(w_jl):
            continue
        for k in range(1, tau + 1):
            i = j - k
            if i < 0:
                break
            if not np.isfinite(table[i, k - 1]):
                continue
            so = _so_scalar(dx, dy, usable, i, k, j, l)
            cand = (w_jl + D[j, l - 1]) + alpha2 * so
            if cand < D[i, k - 1]:
                D[i, k - 1] = cand
                heapq.heappush(heap, (float(cand), i, k))
    return D


def solve_second_order(trace: MotionTrace, spec: GraphSpec,
                       solver: str = "dag_dp") -> SamplingPlan:
    """Minimal-cost frame sequence under first-order plus direction-stability cost."""
    if solver not in ("dag_dp", "dijkstra"):
        raise ValueError(f"unknown solver {solver!r}")
    n = spec.n
    tau = spec.tau
    alpha2 = spec.weights.effective_alpha2
    table = cost_table(trace, spec.weights, tau)
    dx, dy, usable = direction_table(trace, tau)
    if solver == "dijkstra":
        D = _pair_cost_to_sink_dijkstra(table, dx, dy, usable, n, tau, spec.d_end, alpha2)
    else:
        D = _pair_cost_to_sink(table, dx, dy, usable, n, tau, spec.d_end, alpha2)
    selected, smooth = _reconstruct_pairs(
        table, D, dx, dy, usable, n, tau, spec.d_start, spec.d_end, alpha2
    )
    transitions = [
        edge_cost(trace, a, b, spec.weights, smoothness=s)
        for (a, b), s in zip(zip(selected, selected[1:]), smooth)
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
