"""Selection between numba-compiled kernels and the pure-numpy fallback.

Set ``XORLOG_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python over numpy arrays, with atomic instructions emulated under a lock.
"""

import os

_FLAG = os.environ.get("XORLOG_DISABLE_NUMBA", "").strip().lower()

USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:

    def jit(fn=None, *, cache=True):
        if fn is None:
            return lambda f: numba.njit(nogil=True, cache=cache)(f)
        return numba.njit(nogil=True, cache=cache)(fn)

else:

    def jit(fn=None, *, cache=True):
        if fn is None:
            return lambda f: f
        return fn


BACKEND = "numba" if USE_NUMBA else "numpy"
