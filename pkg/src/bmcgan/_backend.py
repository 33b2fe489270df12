"""Kernel backend selection.

Hot loops are compiled with numba when it is importable. Setting the
environment variable ``BMCGAN_NO_NUMBA=1`` forces the pure-numpy fallback,
which is what the benchmark compares against.
"""
import os

_FLAG = "BMCGAN_NO_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes")


def njit(func):
    """Compile ``func`` in nopython mode with the GIL released, or return it untouched."""
    if not NUMBA_AVAILABLE:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def use_numba(backend=None):
    """Resolve a per-call backend request (``None``, ``"numba"`` or ``"numpy"``)."""
    if backend is None:
        return USE_NUMBA
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise ValueError("numba is not installed")
    return backend == "numba"
