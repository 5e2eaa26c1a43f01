# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of pivot_py.run_pivots.

Same algorithm, same tie-breaking, plain C loops instead of numpy
vector ops.  Status codes are hardcoded to match _codes.py.
"""

from libc.math cimport fabs, INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()

# must mirror _codes.py
cdef int NB_LO = 0
cdef int NB_UP = 1
cdef int NB_FREE = 2
cdef int BASIC = 3
cdef int NB_FIXED = 4
cdef int OPTIMAL = 0
cdef int UNBOUNDED = 1
cdef int BUDGET = 2


def run_pivots(
    int[::1] indptr,
    int[::1] rowidx,
    double[::1] aval,
    int[::1] colind,
    double[::1] cost,
    double[::1] lo,
    double[::1] hi,
    double[::1] xval,
    signed char[::1] vstat,
    int[::1] basis,
    double[:, ::1] binv,
    double[::1] xb,
    long max_pivots,
    long bland_after,
    double tol_cost,
    double tol_piv,
    double tol_zero,
    long degen_streak,
):
    cdef int m = basis.shape[0]
    cdef int ncols = cost.shape[0]
    cdef long pivots = 0
    cdef bint bland
    cdef int i, j, k, q, r, jout, st
    cdef double ci, dj, s, best, sigma, a, piv, wi, wr
    cdef double rmin, tbound, step, ratio, enter_val, wabs, wbest

    cdef double[::1] y = np.empty(m, dtype=np.float64)
    cdef double[::1] w = np.empty(m, dtype=np.float64)

    while pivots < max_pivots:
        bland = degen_streak >= bland_after

        # BTRAN: y = B^-T c_B
        for j in range(m):
            y[j] = 0.0
        for i in range(m):
            ci = cost[basis[i]]
            if ci != 0.0:
                for j in range(m):
                    y[j] += ci * binv[i, j]

        # price: Dantzig (largest score, first wins) or Bland (lowest index)
        best = tol_cost
        q = -1
        sigma = 1.0
        for j in range(ncols):
            st = vstat[j]
            if st == BASIC or st == NB_FIXED:
                continue
            dj = cost[j]
            for k in range(indptr[j], indptr[j + 1]):
                dj -= aval[k] * y[rowidx[k]]
            if st == NB_LO:
                s = -dj
            elif st == NB_UP:
                s = dj
            else:
                s = fabs(dj)
            if s > best:
                q = j
                if st == NB_UP or (st == NB_FREE and dj > 0):
                    sigma = -1.0
                else:
                    sigma = 1.0
                if bland:
                    break
                best = s
        if q < 0:
            return OPTIMAL, pivots, degen_streak

        # FTRAN: w = B^-1 A_q
        for i in range(m):
            w[i] = 0.0
        for k in range(indptr[q], indptr[q + 1]):
            a = aval[k]
            j = rowidx[k]
            for i in range(m):
                w[i] += binv[i, j] * a

        # ratio test over basic variables
        rmin = INFINITY
        for i in range(m):
            wi = sigma * w[i]
            if wi > tol_piv:
                if lo[basis[i]] > -INFINITY:
                    ratio = (xb[i] - lo[basis[i]]) / wi
                else:
                    continue
            elif wi < -tol_piv:
                if hi[basis[i]] < INFINITY:
                    ratio = (xb[i] - hi[basis[i]]) / wi
                else:
                    continue
            else:
                continue
            if ratio < 0.0:
                ratio = 0.0
            if ratio < rmin:
                rmin = ratio
        tbound = hi[q] - lo[q]
        step = rmin if rmin < tbound else tbound
        if step == INFINITY:
            return UNBOUNDED, pivots, degen_streak

        if tbound <= rmin:
            for i in range(m):
                xb[i] -= tbound * sigma * w[i]
            if vstat[q] == NB_LO:
                vstat[q] = NB_UP
                xval[q] = hi[q]
            else:
                vstat[q] = NB_LO
                xval[q] = lo[q]
            step = tbound
        else:
            # leaving row: min ratio; ties by largest |w| (or lowest
            # basis index under Bland's rule)
            r = -1
            wbest = -1.0
            for i in range(m):
                wi = sigma * w[i]
                if wi > tol_piv:
                    if lo[basis[i]] == -INFINITY:
                        continue
                    ratio = (xb[i] - lo[basis[i]]) / wi
                elif wi < -tol_piv:
                    if hi[basis[i]] == INFINITY:
                        continue
                    ratio = (xb[i] - hi[basis[i]]) / wi
                else:
                    continue
                if ratio < 0.0:
                    ratio = 0.0
                if ratio <= rmin + 1e-10 * (1.0 + rmin):
                    if bland:
                        if r < 0 or basis[i] < basis[r]:
                            r = i
                    else:
                        wabs = fabs(w[i])
                        if wabs > wbest:
                            wbest = wabs
                            r = i
            enter_val = xval[q] + sigma * rmin
            for i in range(m):
                xb[i] -= rmin * sigma * w[i]
            jout = basis[r]
            if lo[jout] == hi[jout]:
                vstat[jout] = NB_FIXED
                xval[jout] = lo[jout]
            elif sigma * w[r] > 0:
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
            for j in range(m):
                binv[r, j] /= piv
            for i in range(m):
                if i == r:
                    continue
                wi = w[i]
                if wi != 0.0:
                    for j in range(m):
                        binv[i, j] -= wi * binv[r, j]
            step = rmin

        if step <= tol_zero:
            degen_streak += 1
        else:
            degen_streak = 0
        pivots += 1
    return BUDGET, pivots, degen_streak
