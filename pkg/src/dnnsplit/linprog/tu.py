"""Total unimodularity checking by determinant enumeration.

A matrix is totally unimodular (TU) when every square submatrix has
determinant in {-1, 0, 1}.  Checking that literally is exponential, but
a *minimal* violating submatrix can contain no row or column with fewer
than two nonzeros: a zero line gives det 0, and a line with a single
nonzero expands to a smaller violator.  Hence (a) rows/columns with one
global nonzero can be peeled away iteratively without changing the
verdict (slack and identity blocks disappear this way), and (b) within
the peeled matrix only submatrices whose every row and column keeps two
or more nonzeros need their determinant computed.  That makes the
exhaustive small-order sweep cheap on routing constraint matrices.
Larger orders are spot-checked by seeded random sampling with exact
integer determinants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TuVerdict:
    violated: bool
    # original-matrix indices and the offending determinant
    witness_rows: tuple[int, ...] | None = None
    witness_cols: tuple[int, ...] | None = None
    witness_det: int | None = None
    exhaustive_order: int = 0
    sampled: int = 0

    def __bool__(self) -> bool:  # truthy == looks TU
        return not self.violated


def _det_int(mat: np.ndarray) -> int:
    """Exact integer determinant (fraction-free Gaussian elimination)."""
    a = [[int(v) for v in row] for row in mat]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def _peel(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop rows/cols with <2 nonzeros until none remain."""
    rows = np.arange(mask.shape[0])
    cols = np.arange(mask.shape[1])
    sub = mask
    while True:
        keep_r = sub.sum(axis=1) >= 2
        keep_c = sub.sum(axis=0) >= 2
        if keep_r.all() and keep_c.all():
            return rows, cols
        rows = rows[keep_r]
        cols = cols[keep_c]
        sub = mask[np.ix_(rows, cols)]


def check_totally_unimodular(
    matrix,
    *,
    exhaustive_order: int = 4,
    sample_orders: tuple[int, ...] = (5, 6, 7),
    samples_per_order: int = 5000,
    seed: int = 0,
) -> TuVerdict:
    """Search for a submatrix with |det| >= 2.

    Exhaustive over all orders up to `exhaustive_order` (via the
    two-nonzero reduction above), then `samples_per_order` random
    square submatrices for each larger order.  A clean sweep is strong
    evidence, not a proof, hence the verdict wording.
    """
    m = np.asarray(matrix)
    if not np.all(m == np.round(m)):
        raise ValueError("TU check needs an integer matrix")
    m = m.astype(np.int64)
    bad = np.argwhere(np.abs(m) > 1)
    if bad.size:
        r, c = (int(v) for v in bad[0])
        return TuVerdict(True, (r,), (c,), int(m[r, c]), exhaustive_order=1)

    mask = m != 0
    rows, cols = _peel(mask)
    core = m[np.ix_(rows, cols)]
    core_mask = core != 0

    max_k = min(exhaustive_order, *core.shape) if core.size else 0
    for k in range(2, max_k + 1):
        for rsel in itertools.combinations(range(core.shape[0]), k):
            rmask = core_mask[list(rsel)]
            cand = np.flatnonzero(rmask.sum(axis=0) >= 2)
            if cand.size < k:
                continue
            for csel in itertools.combinations(cand.tolist(), k):
                sub_mask = rmask[:, list(csel)]
                if sub_mask.sum(axis=1).min() < 2:
                    continue
                det = _det_int(core[np.ix_(list(rsel), list(csel))])
                if abs(det) > 1:
                    return TuVerdict(
                        True,
                        tuple(int(rows[i]) for i in rsel),
                        tuple(int(cols[j]) for j in csel),
                        det,
                        exhaustive_order=k,
                    )

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    sampled = 0
    nr, nc = m.shape
    for k in sample_orders:
        if k > min(nr, nc) or k <= exhaustive_order:
            continue
        for _ in range(samples_per_order):
            rsel = rng.choice(nr, size=k, replace=False)
            csel = rng.choice(nc, size=k, replace=False)
            sampled += 1
            det = _det_int(m[np.ix_(rsel, csel)])
            if abs(det) > 1:
                return TuVerdict(
                    True,
                    tuple(int(i) for i in rsel),
                    tuple(int(j) for j in csel),
                    det,
                    exhaustive_order=max_k,
                    sampled=sampled,
                )
    return TuVerdict(False, exhaustive_order=max_k, sampled=sampled)
