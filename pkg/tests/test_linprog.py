"""Simplex, branch and bound, and the total-unimodularity checker.

The random-program oracles come from scipy's HiGHS interface, an
independent implementation.
"""

import numpy as np
import pytest
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from dnnsplit.linprog import (
    LinearProgram,
    SolveStatus,
    check_totally_unimodular,
    solve_ilp,
    solve_lp,
)
from dnnsplit.linprog.model import SENSE_EQ, SENSE_GE, SENSE_LE


def scipy_solve(lp: LinearProgram, *, integral: bool):
    data, ri, ci = [], [], []
    bl = np.full(lp.n_rows, -np.inf)
    bu = np.full(lp.n_rows, np.inf)
    for i, (cols, coefs, sense, rhs) in enumerate(lp.rows()):
        ri.extend([i] * len(cols))
        ci.extend(cols)
        data.extend(coefs)
        if sense == SENSE_LE:
            bu[i] = rhs
        elif sense == SENSE_GE:
            bl[i] = rhs
        else:
            assert sense == SENSE_EQ
            bl[i] = bu[i] = rhs
    a = sparse.csr_matrix((data, (ri, ci)), shape=(lp.n_rows, lp.n_vars))
    kinds = lp.is_int.astype(int) if integral else np.zeros(lp.n_vars, dtype=int)
    return milp(
        c=lp.c,
        constraints=LinearConstraint(a, bl, bu),
        integrality=kinds,
        bounds=Bounds(lp.lo, lp.hi),
    )


def test_hand_lp():
    # min -2x - y, x + y <= 1.5, 0 <= x,y <= 1: push x to its bound first
    lp = LinearProgram(2)
    lp.c[:] = (-2.0, -1.0)
    lp.hi[:] = 1.0
    lp.add_row([(0, 1.0), (1, 1.0)], "<=", 1.5)
    sol = solve_lp(lp)
    assert sol.status == SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(-2.5)
    assert sol.x == pytest.approx([1.0, 0.5])


def test_equality_and_ge_rows():
    # min x + y with x + y = 2 and x - y >= 1 -> (1.5, 0.5)
    lp = LinearProgram(2)
    lp.c[:] = 1.0
    lp.hi[:] = 10.0
    lp.add_row([(0, 1.0), (1, 1.0)], "=", 2.0)
    lp.add_row([(0, 1.0), (1, -1.0)], ">=", 1.0)
    sol = solve_lp(lp)
    assert sol.status == SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(2.0)
    assert sol.x[0] - sol.x[1] >= 1.0 - 1e-9


def test_infeasible_and_unbounded():
    lp = LinearProgram(1)
    lp.hi[0] = 1.0
    lp.add_row([(0, 1.0)], ">=", 2.0)
    assert solve_lp(lp).status == SolveStatus.INFEASIBLE

    lp = LinearProgram(1)
    lp.c[0] = -1.0  # maximize x with no upper bound
    assert solve_lp(lp).status == SolveStatus.UNBOUNDED


def _random_lp(rng, *, integral: bool) -> LinearProgram:
    n = rng.integers(2, 7)
    m = rng.integers(1, 5)
    lp = LinearProgram(int(n))
    lp.c[:] = rng.integers(-5, 6, n)
    lp.hi[:] = rng.integers(1, 4, n).astype(float)
    if integral:
        lp.is_int[:] = True
    for _ in range(int(m)):
        cols = rng.choice(n, size=rng.integers(1, n + 1), replace=False)
        coefs = rng.integers(-3, 4, len(cols))
        if not coefs.any():
            coefs[0] = 1
        sense = rng.choice(["<=", ">="])
        # keep the origin feasible so every program is feasible
        rhs = float(rng.integers(0, 8)) if sense == "<=" else -float(rng.integers(0, 8))
        lp.add_row(list(zip(cols.tolist(), coefs.tolist())), sense, rhs)
    return lp


def test_random_lps_match_independent_solver():
    rng = np.random.default_rng(1234)
    for case in range(60):
        lp = _random_lp(rng, integral=False)
        ours = solve_lp(lp)
        ref = scipy_solve(lp, integral=False)
        assert ours.status == SolveStatus.OPTIMAL, f"case {case}"
        assert ref.status == 0, f"case {case}"
        assert ours.objective == pytest.approx(ref.fun, abs=1e-8), f"case {case}"


def test_random_ilps_match_independent_solver():
    rng = np.random.default_rng(4321)
    for case in range(40):
        lp = _random_lp(rng, integral=True)
        ours = solve_ilp(lp, time_limit_s=30.0)
        ref = scipy_solve(lp, integral=True)
        assert ours.status == SolveStatus.OPTIMAL, f"case {case}"
        assert ref.status == 0, f"case {case}"
        assert ours.objective == pytest.approx(ref.fun, abs=1e-8), f"case {case}"
        assert np.allclose(ours.x, np.round(ours.x), atol=1e-9), f"case {case}"


def test_ilp_respects_bounds_and_incumbent_on_limit():
    # knapsack-ish: min -(3x0 + 2x1 + 2x2), 2x0 + x1 + 3x2 <= 3, x binary
    lp = LinearProgram(3)
    lp.c[:] = (-3.0, -2.0, -2.0)
    lp.hi[:] = 1.0
    lp.is_int[:] = True
    lp.add_row([(0, 2.0), (1, 1.0), (2, 3.0)], "<=", 3.0)
    sol = solve_ilp(lp)
    assert sol.status == SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(-5.0)  # x = (1, 1, 0)
    limited = solve_ilp(lp, node_limit=1)
    assert limited.status in (SolveStatus.OPTIMAL, SolveStatus.TIME_LIMIT)
    if limited.status == SolveStatus.TIME_LIMIT and limited.objective is not None:
        assert limited.best_bound <= limited.objective + 1e-9


def test_warm_start_at_upper_bound_is_not_sticky():
    # First solve parks x0 nonbasic at its upper bound.  The second
    # objective moves the optimum to the other vertex; a warm start
    # that forgets the at-upper status would report the stale point.
    lp = LinearProgram(2)
    lp.c[:] = (-2.0, -1.0)
    lp.hi[:] = 1.0
    lp.add_row([(0, 1.0), (1, 1.0)], "<=", 1.5)
    first = solve_lp(lp)
    assert first.x == pytest.approx([1.0, 0.5])

    lp2 = LinearProgram(2)
    lp2.c[:] = (-1.0, -3.0)
    lp2.hi[:] = 1.0
    lp2.add_row([(0, 1.0), (1, 1.0)], "<=", 1.5)
    warm = solve_lp(lp2, warm=first)
    cold = solve_lp(lp2)
    assert warm.status == SolveStatus.OPTIMAL
    assert warm.objective == pytest.approx(cold.objective)
    assert warm.x == pytest.approx([0.5, 1.0])


def test_warm_start_matches_cold_on_cost_perturbations():
    rng = np.random.default_rng(777)
    for case in range(20):
        lp = _random_lp(rng, integral=False)
        base = solve_lp(lp)
        assert base.status == SolveStatus.OPTIMAL
        lp2 = LinearProgram(lp.n_vars)
        lp2.c[:] = lp.c + rng.integers(-2, 3, lp.n_vars)
        lp2.lo[:] = lp.lo
        lp2.hi[:] = lp.hi
        for cols, coefs, sense, rhs in lp.rows():
            lp2._rows.append((cols, coefs, sense, rhs))
        warm = solve_lp(lp2, warm=base)
        cold = solve_lp(lp2)
        assert warm.status == cold.status == SolveStatus.OPTIMAL, f"case {case}"
        assert warm.objective == pytest.approx(cold.objective, abs=1e-8), f"case {case}"


def test_determinism():
    rng = np.random.default_rng(5)
    lp = _random_lp(rng, integral=False)
    a = solve_lp(lp)
    b = solve_lp(lp)
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x)


def test_tu_accepts_network_matrix():
    # node-arc incidence of a directed cycle on 4 nodes: always TU
    inc = np.zeros((4, 4), dtype=int)
    for e, (u, v) in enumerate([(0, 1), (1, 2), (2, 3), (3, 0)]):
        inc[u, e] = 1
        inc[v, e] = -1
    verdict = check_totally_unimodular(inc)
    assert bool(verdict) and not verdict.violated
    assert verdict.witness_rows is None


def test_tu_accepts_interval_matrix():
    m = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]])
    assert not check_totally_unimodular(m).violated


def test_tu_rejects_odd_cycle_and_reports_witness():
    m = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])  # det = 2
    verdict = check_totally_unimodular(m)
    assert verdict.violated
    sub = m[np.ix_(verdict.witness_rows, verdict.witness_cols)]
    assert abs(round(float(np.linalg.det(sub)))) >= 2
    assert abs(verdict.witness_det) >= 2


def test_tu_rejects_large_entries():
    with_two = np.array([[2, 0], [0, 1]])
    verdict = check_totally_unimodular(with_two)
    assert verdict.violated


def test_tu_sampling_finds_planted_violation():
    # plant a bad 5x5 inside an identity so only sampling can see it
    rng = np.random.default_rng(9)
    m = np.eye(9, dtype=int)
    bad = np.array(
        [
            [1, 1, 0, 0, 0],
            [0, 1, 1, 0, 0],
            [0, 0, 1, 1, 0],
            [0, 0, 0, 1, 1],
            [1, 0, 0, 0, 1],
        ]
    )  # odd cycle, det = 2
    idx = rng.permutation(9)[:5]
    m[np.ix_(idx, idx)] = bad
    verdict = check_totally_unimodular(m, exhaustive_order=5)
    assert verdict.violated
