"""Vectorized-numpy implementation of the simplex pivot loop.

This is the fallback backend; the compiled extension in _pivot_cy.pyx
runs the same algorithm with plain C loops.  Both maintain an explicit
dense basis inverse and bounded-variable statuses, and both make
identical tie-break choices (lowest index / first maximum), so a given
backend is fully deterministic.  The caller owns refactorization: the
kernel simply burns through at most `max_pivots` pivots and reports why
it stopped.
"""

from __future__ import annotations

import numpy as np

from ._codes import BASIC, BUDGET, NB_FIXED, NB_FREE, NB_LO, NB_UP, OPTIMAL, UNBOUNDED


def run_pivots(
    indptr: np.ndarray,
    rowidx: np.ndarray,
    aval: np.ndarray,
    colind: np.ndarray,
    cost: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    xval: np.ndarray,
    vstat: np.ndarray,
    basis: np.ndarray,
    binv: np.ndarray,
    xb: np.ndarray,
    max_pivots: int,
    bland_after: int,
    tol_cost: float,
    tol_piv: float,
    tol_zero: float,
    degen_streak: int,
) -> tuple[int, int, int]:
    """Run bounded-variable primal simplex pivots in place.

    Returns (code, pivots_done, degen_streak).  Dantzig pricing by
    default; after `bland_after` consecutive degenerate steps the rule
    switches to Bland's (lowest eligible index, lowest leaving variable
    index) until a step makes progress, which rules out cycling.
    """
    m = basis.shape[0]
    ncols = cost.shape[0]
    pivots = 0
    while pivots < max_pivots:
        bland = degen_streak >= bland_after

        # reduced costs: d = c - A^T (B^-T c_B)
        y = cost[basis] @ binv
        dots = np.bincount(colind, weights=aval * y[rowidx], minlength=ncols)
        d = cost - dots

        score = np.where(
            vstat == NB_LO, -d, np.where(vstat == NB_UP, d, np.abs(d))
        )
        score[(vstat == BASIC) | (vstat == NB_FIXED)] = -np.inf
        if bland:
            elig = np.flatnonzero(score > tol_cost)
            if elig.size == 0:
                return OPTIMAL, pivots, degen_streak
            q = int(elig[0])
        else:
            q = int(np.argmax(score))
            if score[q] <= tol_cost:
                return OPTIMAL, pivots, degen_streak
        sigma = 1.0 if (vstat[q] == NB_LO or (vstat[q] == NB_FREE and d[q] < 0)) else -1.0

        s0, s1 = indptr[q], indptr[q + 1]
        w = binv[:, rowidx[s0:s1]] @ aval[s0:s1]
        wd = sigma * w

        ratios = np.full(m, np.inf)
        pos = wd > tol_piv
        neg = wd < -tol_piv
        lob = lo[basis]
        hib = hi[basis]
        with np.errstate(invalid="ignore"):
            ratios[pos] = (xb[pos] - lob[pos]) / wd[pos]
            ratios[neg] = (xb[neg] - hib[neg]) / wd[neg]
        ratios[np.isnan(ratios)] = np.inf  # inf-bound rows never block
        np.maximum(ratios, 0.0, out=ratios)
        rmin = float(ratios.min()) if m else np.inf
        tbound = hi[q] - lo[q]
        step = min(rmin, tbound)
        if not np.isfinite(step):
            return UNBOUNDED, pivots, degen_streak

        if tbound <= rmin:
            # entering variable runs bound to bound; basis unchanged
            xb -= tbound * wd
            if vstat[q] == NB_LO:
                vstat[q] = NB_UP
                xval[q] = hi[q]
            else:
                vstat[q] = NB_LO
                xval[q] = lo[q]
            step = tbound
        else:
            cand = np.flatnonzero(ratios <= rmin + 1e-10 * (1.0 + rmin))
            if bland:
                r = int(cand[np.argmin(basis[cand])])
            else:
                r = int(cand[np.argmax(np.abs(wd[cand]))])
            enter_val = xval[q] + sigma * rmin
            xb -= rmin * wd
            jout = int(basis[r])
            if lo[jout] == hi[jout]:
                vstat[jout] = NB_FIXED
                xval[jout] = lo[jout]
            elif wd[r] > 0:
                vstat[jout] = NB_LO
                xval[jout] = lo[jout]
            else:
                vstat[jout] = NB_UP
                xval[jout] = hi[jout]
            basis[r] = q
            vstat[q] = BASIC
            xval[q] = 0.0
            xb[r] = enter_val
            piv = w[r]
            binv[r, :] /= piv
            wcol = w.copy()
            wcol[r] = 0.0
            binv -= np.outer(wcol, binv[r])
            step = rmin

        degen_streak = degen_streak + 1 if step <= tol_zero else 0
        pivots += 1
    return BUDGET, pivots, degen_streak
