"""Pivot-kernel backend selection.

The compiled extension is preferred when present; set
DNNSPLIT_BACKEND=python (or =cython) to force a choice.  Everything
above this package is backend-agnostic.
"""

import os

from . import _codes
from ._codes import BASIC, BUDGET, NB_FIXED, NB_FREE, NB_LO, NB_UP, OPTIMAL, UNBOUNDED

_requested = os.environ.get("DNNSPLIT_BACKEND", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _pivot_cy as _impl

        BACKEND = "cython"
    except ImportError:
        from . import pivot_py as _impl

        BACKEND = "python"
elif _requested == "cython":
    from . import _pivot_cy as _impl

    BACKEND = "cython"
elif _requested in ("python", "numpy"):
    from . import pivot_py as _impl

    BACKEND = "python"
else:
    raise ValueError(
        f"DNNSPLIT_BACKEND={_requested!r} not recognized (use auto, cython, or python)"
    )

run_pivots = _impl.run_pivots

__all__ = [
    "run_pivots",
    "BACKEND",
    "NB_LO",
    "NB_UP",
    "NB_FREE",
    "BASIC",
    "NB_FIXED",
    "OPTIMAL",
    "UNBOUNDED",
    "BUDGET",
    "_codes",
]
