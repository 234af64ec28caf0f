"""Numba switch.

Set ``SWNC_NO_NUMBA=1`` to force the pure-numpy kernels even when numba is
importable. The choice is made once, at import time.
"""
import os

_DISABLED = os.environ.get("SWNC_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("disabled by SWNC_NO_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if HAS_NUMBA else "numpy"
