"""Independent brute-force oracles for the solver tests.

These enumerate every valid path / transport plan directly and never share
code with the solvers they check.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from hyperlapse.costs import edge_cost
from hyperlapse.second_order import second_order_cost


def iter_paths(n, tau, d_start, d_end, min_len=1):
    """Every frame sequence satisfying the sampling-plan invariants."""
    sink_from = n - d_end

    def extend(path):
        cur = path[-1]
        if cur >= sink_from and len(path) >= min_len:
            yield list(path)
        for k in range(1, min(tau, n - 1 - cur) + 1):
            path.append(cur + k)
            yield from extend(path)
            path.pop()

    for s in range(min(d_start, n)):
        yield from extend([s])


def scalar_tables(trace, spec):
    """Edge totals and pairwise direction-stability terms via the scalar API."""
    n, tau = spec.n, spec.tau
    W = {}
    for i in range(n):
        for k in range(1, min(tau, n - 1 - i) + 1):
            if (i, i + k) in trace.links:
                W[(i, i + k)] = edge_cost(trace, i, i + k, spec.weights).total
    return W


def so_term(trace, i, j, l):
    return second_order_cost(trace.links[(i, j)], trace.links[(j, l)])


def best_first_order(trace, spec):
    """(cost, path) minimizing the first-order energy by full enumeration."""
    W = scalar_tables(trace, spec)
    best = None
    for path in iter_paths(spec.n, spec.tau, spec.d_start, spec.d_end):
        cost = 0.0
        ok = True
        for a, b in zip(path, path[1:]):
            if (a, b) not in W:
                ok = False
                break
            cost = cost + W[(a, b)]
        if not ok:
            continue
        key = (cost, path)
        if best is None or key < best:
            best = key
    return best


def best_second_order(trace, spec):
    """(cost, path) minimizing first-order plus direction-stability energy."""
    W = scalar_tables(trace, spec)
    a2 = spec.weights.effective_alpha2
    SO = {}
    for (i, j) in W:
        for l in range(j + 1, min(j + spec.tau, spec.n - 1) + 1):
            if (j, l) in W:
                SO[(i, j, l)] = so_term(trace, i, j, l)
    best = None
    for path in iter_paths(spec.n, spec.tau, spec.d_start, spec.d_end, min_len=2):
        cost = 0.0
        ok = True
        for idx, (a, b) in enumerate(zip(path, path[1:])):
            if (a, b) not in W:
                ok = False
                break
            if idx == 0:
                cost = cost + W[(a, b)]
            else:
                cost = cost + (W[(a, b)] + a2 * SO[(path[idx - 1], a, b)])
        if not ok:
            continue
        key = (cost, path)
        if best is None or key < best:
            best = key
    return best


def emd_transport(h1: np.ndarray, h2: np.ndarray) -> float:
    """Minimum-cost transport between two 1-D histograms with |i-j| ground
    distance, via linear programming."""
    B = len(h1)
    cost = np.abs(np.subtract.outer(np.arange(B), np.arange(B))).astype(float).reshape(-1)
    A_eq = []
    b_eq = []
    for i in range(B):
        row = np.zeros(B * B)
        row[i * B : (i + 1) * B] = 1.0
        A_eq.append(row)
        b_eq.append(h1[i])
    for j in range(B):
        row = np.zeros(B * B)
        row[j::B] = 1.0
        A_eq.append(row)
        b_eq.append(h2[j])
    res = linprog(cost, A_eq=np.array(A_eq), b_eq=np.array(b_eq),
                  bounds=(0, None), method="highs")
    assert res.success
    return float(res.fun)


def best_candidate_path(m, weight_fn, succ_sets, sources, sinks):
    """Exhaustive shortest path over an explicit candidate DAG."""
    best = None

    def extend(path, cost):
        nonlocal best
        cur = path[-1]
        if cur in sinks:
            key = (cost, list(path))
            if best is None or key < best:
                best = key
        for q in succ_sets[cur]:
            path.append(q)
            extend(path, cost + weight_fn(cur, q))
            path.pop()

    for s in sources:
        extend([s], 0.0)
    return best
