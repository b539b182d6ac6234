"""Kernel backend selection.

Hot loops are written twice: a numba ``@njit`` version and a vectorised
numpy version.  ``PRAST_BACKEND`` picks one at import time::

    PRAST_BACKEND=numba   # default when numba imports
    PRAST_BACKEND=numpy   # pure numpy, no JIT

``PRAST_THREADS`` caps numba's thread pool.
"""
import os

_requested = os.environ.get("PRAST_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"PRAST_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

_threads = os.environ.get("PRAST_THREADS")
if _threads and "NUMBA_NUM_THREADS" not in os.environ:
    # must be set before numba is imported
    os.environ["NUMBA_NUM_THREADS"] = _threads

# prefer OpenMP; old TBB builds only produce a warning before being skipped
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

HAVE_NUMBA = False
if _requested == "numba":
    try:
        import numba
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep in practice
        pass

BACKEND = "numba" if HAVE_NUMBA else "numpy"

if not HAVE_NUMBA:

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range


def set_threads(n=None):
    """Set the numba thread count (no-op on the numpy backend)."""
    if not HAVE_NUMBA:
        return 1
    n = n or int(os.environ.get("PRAST_THREADS", 0)) or numba.config.NUMBA_NUM_THREADS
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


if HAVE_NUMBA and _threads:
    set_threads(int(_threads))
