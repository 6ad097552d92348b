"""Numba switch for the hot kernels.

Set ``SWHMM_NUMBA=0`` in the environment before import to run every kernel
on its pure-numpy / pure-python path instead.
"""
import os

_flag = os.environ.get("SWHMM_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "off", "no")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None
    USE_NUMBA = False


def njit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it untouched."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
