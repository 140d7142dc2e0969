"""Backend selection for the batch kernels.

Set ``BICTX_BACKEND=numpy`` to force the pure-numpy path; the default is
``numba`` whenever it imports. The choice is read once, at import time.
"""

import os
import warnings

# the parallel backend probes TBB and warns when only an old version exists
warnings.filterwarnings("ignore", message="The TBB threading layer requires")

try:
    import numba
    from numba import njit, prange

    # try OpenMP first so the TBB probe (and its warning) is skipped
    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func

    prange = range


def _requested_backend():
    value = os.environ.get("BICTX_BACKEND", "").strip().lower()
    if value in ("", "auto", "numba"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if value == "numpy":
        return "numpy"
    raise RuntimeError(f"BICTX_BACKEND must be 'numba' or 'numpy', got {value!r}")


BACKEND = _requested_backend()


def set_threads(n):
    """Bound numba worker threads. Results never depend on this value."""
    if n is None or numba is None:
        return
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


def default_threads():
    value = os.environ.get("BICTX_THREADS")
    return int(value) if value else None
