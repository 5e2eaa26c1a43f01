"""Best-first branch and bound over the simplex relaxation.

Branching is on the most fractional integer variable (lowest index on
ties), the floor child is queued before the ceil child, and the node
queue is ordered by (parent bound, insertion counter), so the search
tree and the returned optimum are deterministic for a given backend.
"""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .model import LinearProgram, LpSolution, SolveStatus
from .simplex import DEFAULT_MAX_PIVOTS, solve_lp

INT_TOL = 1e-6
OBJ_TOL = 1e-9


def _fractional(x: np.ndarray, is_int: np.ndarray) -> int | None:
    """Index of the most fractional integer variable, or None."""
    xi = x[is_int]
    dist = np.minimum(xi - np.floor(xi), np.ceil(xi) - xi)
    j = int(np.argmax(dist)) if dist.size else 0
    if dist.size == 0 or dist[j] <= INT_TOL:
        return None
    return int(np.flatnonzero(is_int)[j])


def solve_ilp(
    lp: LinearProgram,
    *,
    time_limit_s: float | None = 10.0,
    node_limit: int | None = None,
    max_pivots: int = DEFAULT_MAX_PIVOTS,
) -> LpSolution:
    """Minimize lp.c @ x with the integrality flags enforced.

    On hitting a limit the incumbent (if any) is returned with status
    TIME_LIMIT together with the proven lower bound and gap.
    """
    if not lp.is_int.any():
        return solve_lp(lp, max_pivots=max_pivots)

    t0 = time.monotonic()
    root = solve_lp(lp, max_pivots=max_pivots)
    nodes = 1
    iters = root.iterations
    if root.status == SolveStatus.INFEASIBLE:
        return LpSolution(status=SolveStatus.INFEASIBLE, iterations=iters, nodes=nodes)
    if root.status == SolveStatus.UNBOUNDED:
        return LpSolution(status=SolveStatus.UNBOUNDED, iterations=iters, nodes=nodes)
    if root.status != SolveStatus.OPTIMAL:
        return LpSolution(status=root.status, iterations=iters, nodes=nodes)

    inc: LpSolution | None = None
    inc_obj = math.inf
    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray, LpSolution | None]] = []

    def push(bound: float, lo, hi, sol) -> None:
        nonlocal counter
        heapq.heappush(heap, (bound, counter, lo, hi, sol))
        counter += 1

    push(root.objective, lp.lo.copy(), lp.hi.copy(), root)
    status = SolveStatus.OPTIMAL
    while heap:
        bound, _, lo, hi, sol = heapq.heappop(heap)
        if bound >= inc_obj - OBJ_TOL * (1.0 + abs(inc_obj)):
            break  # best-first: everything left is no better
        if time_limit_s is not None and time.monotonic() - t0 > time_limit_s:
            status = SolveStatus.TIME_LIMIT
            push(bound, lo, hi, sol)  # keep it for the bound report
            break
        if node_limit is not None and nodes >= node_limit:
            status = SolveStatus.TIME_LIMIT
            push(bound, lo, hi, sol)
            break
        if sol is None:
            sol = solve_lp(lp, lo=lo, hi=hi, max_pivots=max_pivots)
            nodes += 1
            iters += sol.iterations
            if sol.status == SolveStatus.INFEASIBLE:
                continue
            if sol.status != SolveStatus.OPTIMAL:
                status = SolveStatus.TIME_LIMIT
                break
            if sol.objective >= inc_obj - OBJ_TOL * (1.0 + abs(inc_obj)):
                continue
        j = _fractional(sol.x, lp.is_int)
        if j is None:
            if sol.objective < inc_obj:
                inc = sol
                inc_obj = sol.objective
            continue
        xj = float(sol.x[j])
        lo_dn, hi_dn = lo.copy(), hi.copy()
        hi_dn[j] = math.floor(xj)
        push(sol.objective, lo_dn, hi_dn, None)
        lo_up, hi_up = lo.copy(), hi.copy()
        lo_up[j] = math.ceil(xj)
        push(sol.objective, lo_up, hi_up, None)

    best_bound = min([b for b, *_ in heap], default=inc_obj)
    best_bound = min(best_bound, inc_obj)
    if inc is None:
        final = SolveStatus.INFEASIBLE if status == SolveStatus.OPTIMAL else status
        return LpSolution(
            status=final,
            iterations=iters,
            nodes=nodes,
            best_bound=None if final == SolveStatus.INFEASIBLE else best_bound,
        )
    gap = (inc_obj - best_bound) / max(1e-12, abs(inc_obj))
    return LpSolution(
        status=status,
        objective=inc_obj,
        x=inc.x,
        iterations=iters,
        basis=inc.basis,
        vstat=inc.vstat,
        best_bound=best_bound,
        gap=max(0.0, gap),
        nodes=nodes,
    )
