"""Backend selection for the hot loops.

Set ``LEVYTRAP_BACKEND=numpy`` to force the pure-numpy fallback; the default
is ``numba`` whenever numba imports cleanly.
"""
import os

_requested = os.environ.get("LEVYTRAP_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"LEVYTRAP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if (HAVE_NUMBA and _requested == "numba") else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
