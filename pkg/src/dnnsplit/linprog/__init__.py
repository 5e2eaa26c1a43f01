"""Self-contained LP/ILP machinery: bounded-variable primal simplex,
branch and bound, and a total-unimodularity checker."""

from .branch_bound import solve_ilp
from .model import LinearProgram, LpSolution, SolveStatus, build_standard_form
from .simplex import solve_lp
from .tu import TuVerdict, check_totally_unimodular

__all__ = [
    "LinearProgram",
    "LpSolution",
    "SolveStatus",
    "build_standard_form",
    "solve_lp",
    "solve_ilp",
    "TuVerdict",
    "check_totally_unimodular",
]
