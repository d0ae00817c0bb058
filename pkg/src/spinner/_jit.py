"""Optional numba acceleration.

Hot kernels are written once in numba-compatible numpy/scalar code and
decorated with :func:`jit`. Setting ``SPINNER_DISABLE_NUMBA=1`` (or running
without numba installed) leaves them as plain Python functions.
"""
import os

_DISABLED = os.environ.get("SPINNER_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit
    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def jit(func):
    """Compile ``func`` with ``numba.njit`` when enabled, else return it unchanged."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func


def python_impl(func):
    """Return the uncompiled Python function behind a kernel."""
    return getattr(func, "py_func", func)
