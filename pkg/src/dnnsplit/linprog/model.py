"""Linear/integer program container and solution types.

A LinearProgram is always a minimization over bounded variables with
rows of the form a.x {<=,=,>=} b.  Variables are created up front; rows
are appended and frozen on first solve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SENSE_LE = -1
SENSE_EQ = 0
SENSE_GE = 1

_SENSES = {"<=": SENSE_LE, "=": SENSE_EQ, "==": SENSE_EQ, ">=": SENSE_GE}


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter_limit"
    TIME_LIMIT = "time_limit"


@dataclass
class LpSolution:
    status: SolveStatus
    objective: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0
    # basis/vstat describe the final simplex state and enable warm starts
    basis: np.ndarray | None = None
    vstat: np.ndarray | None = None
    # branch-and-bound extras
    best_bound: float | None = None
    gap: float | None = None
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


class LinearProgram:
    """Minimize c.x subject to row constraints and variable bounds."""

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.c = np.zeros(n_vars)
        self.lo = np.zeros(n_vars)
        self.hi = np.full(n_vars, np.inf)
        self.is_int = np.zeros(n_vars, dtype=bool)
        self._rows: list[tuple[list[int], list[float], int, float]] = []
        self._frozen = False
        self.col_names: list[str] | None = None
        self.row_names: list[str] | None = None

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    def add_row(self, entries, sense: str, rhs: float) -> int:
        """entries: iterable of (col, coef); returns the row index."""
        if self._frozen:
            raise RuntimeError("program already frozen by a solve")
        cols, coefs = [], []
        for col, coef in entries:
            if not 0 <= col < self.n_vars:
                raise IndexError(f"column {col} out of range")
            if coef != 0.0:
                cols.append(int(col))
                coefs.append(float(coef))
        self._rows.append((cols, coefs, _SENSES[sense], float(rhs)))
        return len(self._rows) - 1

    def freeze(self) -> None:
        self._frozen = True

    def rows(self):
        return self._rows

    def row_arrays(self):
        """Triplet view (row, col, coef) plus senses and rhs arrays."""
        rr, cc, vv = [], [], []
        for i, (cols, coefs, _, _) in enumerate(self._rows):
            rr.extend([i] * len(cols))
            cc.extend(cols)
            vv.extend(coefs)
        senses = np.array([s for _, _, s, _ in self._rows], dtype=np.int8)
        rhs = np.array([b for _, _, _, b in self._rows], dtype=np.float64)
        return (
            np.asarray(rr, dtype=np.int32),
            np.asarray(cc, dtype=np.int32),
            np.asarray(vv, dtype=np.float64),
            senses,
            rhs,
        )

    def dense_matrix(self) -> np.ndarray:
        a = np.zeros((self.n_rows, self.n_vars))
        for i, (cols, coefs, _, _) in enumerate(self._rows):
            a[i, cols] = coefs
        return a

    # -- MPS export --------------------------------------------------

    def write_mps(self, path, name: str = "DNNSPLIT") -> None:
        """Fixed-format MPS dump (integers via MARKER sections)."""
        col_names = self.col_names or [f"X{j}" for j in range(self.n_vars)]
        row_names = self.row_names or [f"R{i}" for i in range(self.n_rows)]
        sense_tag = {SENSE_LE: "L", SENSE_EQ: "E", SENSE_GE: "G"}
        by_col: list[list[tuple[int, float]]] = [[] for _ in range(self.n_vars)]
        for i, (cols, coefs, _, _) in enumerate(self._rows):
            for c, v in zip(cols, coefs):
                by_col[c].append((i, v))
        lines = [f"NAME          {name}", "ROWS", " N  COST"]
        for i, (_, _, sense, _) in enumerate(self._rows):
            lines.append(f" {sense_tag[sense]}  {row_names[i]}")
        lines.append("COLUMNS")
        in_int = False
        for j in range(self.n_vars):
            if self.is_int[j] != in_int:
                marker = "INTORG" if self.is_int[j] else "INTEND"
                lines.append(f"    MARKER                 'MARKER'                 '{marker}'")
                in_int = bool(self.is_int[j])
            if self.c[j] != 0.0:
                lines.append(f"    {col_names[j]:<10}COST      {self.c[j]:.12g}")
            for i, v in by_col[j]:
                lines.append(f"    {col_names[j]:<10}{row_names[i]:<10}{v:.12g}")
        if in_int:
            lines.append("    MARKER                 'MARKER'                 'INTEND'")
        lines.append("RHS")
        for i, (_, _, _, rhs) in enumerate(self._rows):
            if rhs != 0.0:
                lines.append(f"    RHS       {row_names[i]:<10}{rhs:.12g}")
        lines.append("BOUNDS")
        for j in range(self.n_vars):
            lov, hiv = self.lo[j], self.hi[j]
            if lov == hiv:
                lines.append(f" FX BND       {col_names[j]:<10}{lov:.12g}")
                continue
            if lov != 0.0:
                tag = "MI" if np.isneginf(lov) else "LO"
                val = "" if tag == "MI" else f"{lov:.12g}"
                lines.append(f" {tag} BND       {col_names[j]:<10}{val}")
            if not np.isposinf(hiv):
                lines.append(f" UP BND       {col_names[j]:<10}{hiv:.12g}")
        lines.append("ENDATA")
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


@dataclass
class StandardForm:
    """Equality standard form with slack and artificial columns.

    Column layout: [0, n) structural, [n, n+m) slacks (coefficient +1,
    bounds encode the row sense), [n+m, n+2m) artificials (coefficient
    +1, closed during phase 1).
    """

    n_struct: int
    m: int
    indptr: np.ndarray
    rowidx: np.ndarray
    aval: np.ndarray
    colind: np.ndarray
    b: np.ndarray
    senses: np.ndarray
    slack_lo: np.ndarray
    slack_hi: np.ndarray
    row_scale: np.ndarray = field(default=None)

    @property
    def n_cols(self) -> int:
        return self.n_struct + 2 * self.m


def build_standard_form(lp: LinearProgram, scale_rows: bool = True) -> StandardForm:
    """Convert row constraints to Ax + s = b in CSC layout.

    Rows with large coefficients (budget rows) are optionally scaled by
    1/max|coef| to keep the basis well conditioned; scaling by a
    positive constant changes neither feasibility nor the solution.
    """
    lp.freeze()
    n, m = lp.n_vars, lp.n_rows
    rr, cc, vv, senses, rhs = lp.row_arrays()
    scale = np.ones(m)
    if scale_rows and len(vv):
        maxabs = np.ones(m)
        np.maximum.at(maxabs, rr, np.abs(vv))
        big = maxabs > 1.0
        scale[big] = 1.0 / maxabs[big]
        vv = vv * scale[rr]
        rhs = rhs * scale
    # CSC for structural columns
    order = np.lexsort((rr, cc))
    cc_s, rr_s, vv_s = cc[order], rr[order], vv[order]
    counts = np.bincount(cc_s, minlength=n)
    indptr = np.zeros(n + 2 * m + 1, dtype=np.int32)
    indptr[1 : n + 1] = np.cumsum(counts)
    nnz_struct = len(vv_s)
    # slack then artificial columns: one +1 entry each
    indptr[n + 1 :] = nnz_struct + np.arange(1, 2 * m + 1)
    rowidx = np.concatenate(
        [rr_s, np.arange(m, dtype=np.int32), np.arange(m, dtype=np.int32)]
    ).astype(np.int32)
    aval = np.concatenate([vv_s, np.ones(2 * m)])
    colind = np.repeat(
        np.arange(n + 2 * m, dtype=np.int32), np.diff(indptr).astype(np.int64)
    )
    slack_lo = np.where(senses == SENSE_GE, -np.inf, 0.0)
    slack_hi = np.where(senses == SENSE_LE, np.inf, 0.0)
    return StandardForm(
        n_struct=n,
        m=m,
        indptr=indptr,
        rowidx=rowidx,
        aval=aval,
        colind=colind,
        b=rhs,
        senses=senses,
        slack_lo=slack_lo,
        slack_hi=slack_hi,
        row_scale=scale,
    )
