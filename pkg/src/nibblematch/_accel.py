"""Backend selection for the hot kernels.

Set ``NIBBLEMATCH_BACKEND=numpy`` to run without numba.  The flag is read once
at import time.
"""

import functools
import os

BACKEND = os.environ.get("NIBBLEMATCH_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ImportError(f"unknown NIBBLEMATCH_BACKEND {BACKEND!r}")

if BACKEND == "numba":
    try:
        import numba
    except ImportError:  # pragma: no cover
        BACKEND = "numpy"

if BACKEND == "numba":
    kernel = functools.partial(numba.njit, cache=True)
else:
    def kernel(func):
        return func
