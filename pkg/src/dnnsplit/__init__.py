"""Split DNN inference jobs across a computing network.

Routing, scheduling, and evaluation tools built around a layered-graph
view of distributed DNN inference: exact ILP/LP formulations solved by
a built-in simplex, greedy priority routing with waiting-time
estimates, simple baselines, a brute-force oracle, and a discrete-event
simulator for ground truth.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
