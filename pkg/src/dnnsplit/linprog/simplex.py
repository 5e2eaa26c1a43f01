"""Two-phase bounded-variable primal simplex.

The pivot loop itself lives in dnnsplit._kernels (compiled extension or
numpy fallback); this module owns problem setup, phase switching,
periodic refactorization of the dense basis inverse, warm starts, and
solution extraction/validation.  Returned optima are always basic
(vertex) solutions, which is what makes integrality of the routing
relaxations observable rather than accidental.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from .._kernels import BASIC, BUDGET, NB_FIXED, NB_FREE, NB_LO, NB_UP, OPTIMAL, UNBOUNDED
from .model import LinearProgram, LpSolution, SolveStatus, StandardForm, build_standard_form

TOL_FEAS = 1e-7    # row feasibility
TOL_COST = 1e-9    # reduced-cost optimality
TOL_PIV = 1e-9     # smallest usable ratio-test denominator
TOL_ZERO = 1e-11   # step sizes below this count as degenerate
BLAND_AFTER = 50   # degenerate steps before Bland's rule engages
REFACTOR_EVERY = 500
DEFAULT_MAX_PIVOTS = 1_000_000


def _std_of(lp: LinearProgram) -> StandardForm:
    std = getattr(lp, "_std_cache", None)
    if std is None:
        std = build_standard_form(lp)
        lp._std_cache = std
    return std


def _row_activity(std: StandardForm, xfull: np.ndarray) -> np.ndarray:
    prod = std.aval * xfull[std.colind]
    return np.bincount(std.rowidx, weights=prod, minlength=std.m)


def _refactor(std, basis, xval, xb, binv) -> None:
    m = std.m
    bmat = np.zeros((m, m))
    for r, col in enumerate(basis):
        s0, s1 = std.indptr[col], std.indptr[col + 1]
        bmat[std.rowidx[s0:s1], r] = std.aval[s0:s1]
    binv[:] = np.linalg.inv(bmat)
    xb[:] = binv @ (std.b - _row_activity(std, xval))


class _State:
    """Mutable simplex state over the standard-form columns."""

    def __init__(self, std: StandardForm, lo_struct, hi_struct):
        n, m = std.n_struct, std.m
        self.std = std
        self.lo = np.concatenate([lo_struct, std.slack_lo, np.zeros(m)])
        self.hi = np.concatenate([hi_struct, std.slack_hi, np.zeros(m)])
        self.cost = np.zeros(std.n_cols)
        self.xval = np.zeros(std.n_cols)
        self.vstat = np.zeros(std.n_cols, dtype=np.int8)
        self.basis = np.zeros(m, dtype=np.int32)
        self.binv = np.eye(m)
        self.xb = np.zeros(m)
        self.pivots = 0
        self.degen = 0

    def set_nonbasic_rest(self, cols) -> None:
        """Put `cols` at their nearest bound (or free at zero)."""
        lo, hi = self.lo[cols], self.hi[cols]
        stat = np.where(
            lo == hi,
            NB_FIXED,
            np.where(np.isfinite(lo), NB_LO, np.where(np.isfinite(hi), NB_UP, NB_FREE)),
        )
        val = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        self.vstat[cols] = stat
        self.xval[cols] = val

    def run(self, max_pivots: int) -> int:
        """Pivot until optimal/unbounded or the budget runs out."""
        std = self.std
        while True:
            chunk = min(REFACTOR_EVERY, max_pivots - self.pivots)
            if chunk <= 0:
                return BUDGET
            code, done, self.degen = _kernels.run_pivots(
                std.indptr,
                std.rowidx,
                std.aval,
                std.colind,
                self.cost,
                self.lo,
                self.hi,
                self.xval,
                self.vstat,
                self.basis,
                self.binv,
                self.xb,
                chunk,
                BLAND_AFTER,
                TOL_COST,
                TOL_PIV,
                TOL_ZERO,
                self.degen,
            )
            self.pivots += done
            if code == BUDGET:
                _refactor(std, self.basis, self.xval, self.xb, self.binv)
                continue
            if code == OPTIMAL:
                # refactor and re-verify; drift can hide eligible columns
                _refactor(std, self.basis, self.xval, self.xb, self.binv)
                code2, done2, self.degen = _kernels.run_pivots(
                    std.indptr,
                    std.rowidx,
                    std.aval,
                    std.colind,
                    self.cost,
                    self.lo,
                    self.hi,
                    self.xval,
                    self.vstat,
                    self.basis,
                    self.binv,
                    self.xb,
                    1,
                    BLAND_AFTER,
                    TOL_COST,
                    TOL_PIV,
                    TOL_ZERO,
                    self.degen,
                )
                self.pivots += done2
                if code2 == OPTIMAL and done2 == 0:
                    return OPTIMAL
                continue
            return code

    def x_full(self) -> np.ndarray:
        x = self.xval.copy()
        x[self.basis] = self.xb
        return x


def _cold_start(state: _State) -> bool:
    """Choose the initial basis; returns True if phase 1 is needed."""
    std = state.std
    n, m = std.n_struct, std.m
    state.set_nonbasic_rest(np.arange(n + m))
    resid = std.b - _row_activity(std, state.xval)
    need_art = False
    for r in range(m):
        slack = n + r
        ok = state.lo[slack] - TOL_FEAS <= resid[r] <= state.hi[slack] + TOL_FEAS
        if ok:
            state.basis[r] = slack
            state.vstat[slack] = BASIC
            state.xval[slack] = 0.0
            state.xb[r] = resid[r]
        else:
            art = n + m + r
            state.basis[r] = art
            state.vstat[art] = BASIC
            state.xval[art] = 0.0
            state.xb[r] = resid[r]
            if resid[r] > 0:
                state.lo[art], state.hi[art] = 0.0, np.inf
                state.cost[art] = 1.0
            else:
                state.lo[art], state.hi[art] = -np.inf, 0.0
                state.cost[art] = -1.0
            need_art = True
    return need_art


def _drive_out_artificials(state: _State) -> None:
    """Swap residual basic artificials for structural/slack columns."""
    std = state.std
    n, m = std.n_struct, std.m
    for r in range(m):
        if state.basis[r] < n + m:
            continue
        zrow = state.binv[r]
        vals = np.bincount(
            std.colind, weights=std.aval * zrow[std.rowidx], minlength=std.n_cols
        )
        vals[n + m :] = 0.0
        vals[state.basis] = 0.0
        cands = np.flatnonzero(np.abs(vals) > 1e-7)
        if cands.size == 0:
            continue  # redundant row; artificial stays pinned at zero
        q = int(cands[0])
        s0, s1 = std.indptr[q], std.indptr[q + 1]
        w = state.binv[:, std.rowidx[s0:s1]] @ std.aval[s0:s1]
        jout = int(state.basis[r])
        state.vstat[jout] = NB_FIXED
        state.xval[jout] = 0.0
        state.basis[r] = q
        state.vstat[q] = BASIC
        enter_val = state.xval[q]
        state.xval[q] = 0.0
        piv = w[r]
        state.binv[r, :] /= piv
        wcol = w.copy()
        wcol[r] = 0.0
        state.binv -= np.outer(wcol, state.binv[r])
        state.xb[r] = enter_val


def _close_artificials(state: _State) -> None:
    std = state.std
    n, m = std.n_struct, std.m
    art = np.arange(n + m, n + 2 * m)
    state.lo[art] = 0.0
    state.hi[art] = 0.0
    state.cost[art] = 0.0
    nonbasic = state.vstat[art] != BASIC
    state.vstat[art[nonbasic]] = NB_FIXED
    state.xval[art[nonbasic]] = 0.0


def solve_lp(
    lp: LinearProgram,
    *,
    max_pivots: int = DEFAULT_MAX_PIVOTS,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
    warm: LpSolution | None = None,
) -> LpSolution:
    """Minimize lp.c @ x; integrality flags are ignored here.

    lo/hi override the structural variable bounds (used by the
    branch-and-bound driver).  `warm` may carry basis/vstat from a
    previous solve of the same program shape; if that basis is primal
    feasible under the current bounds, phase 1 is skipped.
    """
    std = _std_of(lp)
    lo_s = lp.lo if lo is None else lo
    hi_s = hi if hi is not None else lp.hi
    state = _State(std, lo_s, hi_s)

    warmed = False
    if warm is not None and warm.basis is not None:
        warmed = _try_warm_start(state, warm)
    if not warmed:
        need_phase1 = _cold_start(state)
        if need_phase1:
            code = state.run(max_pivots)
            if code == BUDGET:
                return LpSolution(status=SolveStatus.ITER_LIMIT, iterations=state.pivots)
            if code == UNBOUNDED:
                raise ArithmeticError("phase 1 cannot be unbounded")
            art_rows = state.basis >= std.n_struct + std.m
            infeas = float(np.abs(state.xb[art_rows]).sum())
            if infeas > TOL_FEAS * (1.0 + float(np.abs(std.b).max(initial=0.0))):
                return LpSolution(status=SolveStatus.INFEASIBLE, iterations=state.pivots)
            _drive_out_artificials(state)
        _close_artificials(state)

    state.cost[: std.n_struct] = lp.c
    state.cost[std.n_struct :] = 0.0
    code = state.run(max_pivots)
    if code == BUDGET:
        return LpSolution(status=SolveStatus.ITER_LIMIT, iterations=state.pivots)
    if code == UNBOUNDED:
        return LpSolution(status=SolveStatus.UNBOUNDED, iterations=state.pivots)

    xfull = state.x_full()
    _validate(lp, std, state, xfull, lo_s, hi_s)
    x = np.clip(xfull[: std.n_struct], lo_s, hi_s)
    return LpSolution(
        status=SolveStatus.OPTIMAL,
        objective=float(lp.c @ x),
        x=x,
        iterations=state.pivots,
        basis=state.basis.copy(),
        vstat=state.vstat.copy(),
    )


def _try_warm_start(state: _State, warm: LpSolution) -> bool:
    """Adopt a previous basis if it is still primal feasible."""
    std = state.std
    basis = np.asarray(warm.basis, dtype=np.int32)
    vstat = np.asarray(warm.vstat, dtype=np.int8)
    if basis.shape[0] != std.m or vstat.shape[0] != std.n_cols:
        return False
    if len(np.unique(basis)) != std.m:
        return False
    state.basis[:] = basis
    state.vstat[:] = vstat
    nonbasic = np.setdiff1d(np.arange(std.n_cols), basis, assume_unique=False)
    state.set_nonbasic_rest(nonbasic)
    # honor remembered at-upper statuses where the upper bound is finite
    # and the variable is not fixed (set_nonbasic_rest defaulted these
    # to their lower bound)
    up = nonbasic[
        (vstat[nonbasic] == NB_UP) & (state.vstat[nonbasic] == NB_LO)
    ]
    ok_up = np.isfinite(state.hi[up])
    state.vstat[up[ok_up]] = NB_UP
    state.xval[up[ok_up]] = state.hi[up[ok_up]]
    state.vstat[basis] = BASIC
    state.xval[basis] = 0.0
    _close_artificials(state)
    try:
        _refactor(std, state.basis, state.xval, state.xb, state.binv)
    except np.linalg.LinAlgError:
        return False
    lob, hib = state.lo[basis], state.hi[basis]
    if np.all(state.xb >= lob - TOL_FEAS) and np.all(state.xb <= hib + TOL_FEAS):
        return True
    return False


def _validate(lp, std, state, xfull, lo_s, hi_s) -> None:
    resid = std.b - _row_activity(std, xfull)
    scale = 1.0 + float(np.abs(std.b).max(initial=0.0))
    if float(np.abs(resid).max(initial=0.0)) > TOL_FEAS * scale:
        # one repair attempt: rebuild the inverse and basic values
        _refactor(std, state.basis, state.xval, state.xb, state.binv)
        xfull[:] = state.x_full()
        resid = std.b - _row_activity(std, xfull)
        if float(np.abs(resid).max(initial=0.0)) > TOL_FEAS * scale:
            raise ArithmeticError("optimal basis fails row feasibility check")
    x = xfull[: std.n_struct]
    if np.any(x < lo_s - 1e-9) or np.any(x > hi_s + 1e-9):
        raise ArithmeticError("optimal solution violates variable bounds")
