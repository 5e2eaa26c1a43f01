"""Shared integer codes for the pivot kernels.

Both kernel implementations (numpy and the compiled extension) use the
same variable-status and return codes; the .pyx file hardcodes the same
literals, so treat these values as frozen.
"""

# variable status
NB_LO = 0     # nonbasic at lower bound
NB_UP = 1     # nonbasic at upper bound
NB_FREE = 2   # nonbasic free (value 0)
BASIC = 3
NB_FIXED = 4  # nonbasic with lo == hi, never priced

# run_pivots return codes
OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2    # pivot allowance for this call exhausted
