"""Optional numba acceleration.

Hot kernels are decorated with :func:`jit`.  When numba is importable and the
environment variable ``P2MU_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the plain Python function is used.
Both paths run the same source, so results agree to rounding.
"""
import os

_flag = os.environ.get("P2MU_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def jit(func=None, **kwargs):
    """``numba.njit(cache=True, **kwargs)`` or identity, depending on the flag."""
    opts = {"cache": True}
    opts.update(kwargs)

    def wrap(f):
        if NUMBA_ENABLED:
            return numba.njit(**opts)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap
