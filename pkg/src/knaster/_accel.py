"""Optional numba acceleration.

Set ``KNASTER_DISABLE_NUMBA=1`` to force the pure-numpy code paths, e.g. for
debugging or on platforms without a working LLVM.
"""
import os

_disabled = os.environ.get("KNASTER_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError
    import numba
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _disabled


def try_njit(*args, **kwargs):
    """``numba.njit`` when numba is usable, otherwise a no-op decorator.

    Works both bare (``@try_njit``) and with options (``@try_njit(cache=True)``).
    """
    if len(args) == 1 and callable(args[0]) and not kwargs:
        func = args[0]
        return numba.njit(cache=True)(func) if HAS_NUMBA else func

    def wrap(func):
        if not HAS_NUMBA:
            return func
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)(func)

    return wrap
