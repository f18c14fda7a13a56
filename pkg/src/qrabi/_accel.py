"""Kernel dispatch between numba-compiled loops and pure-numpy fallbacks.

Set ``QRABI_DISABLE_NUMBA=1`` before import to force the numpy path; the
same switch is honoured when numba is not installed.
"""
import os

DISABLE_ENV = "QRABI_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()

if USE_NUMBA:
    # old system TBB triggers a warning on every parallel compile
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "workqueue"
    prange = numba.prange
else:
    prange = range


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is active, identity otherwise."""
    kwargs.setdefault("cache", True)

    def wrap(fn):
        if USE_NUMBA:
            return numba.njit(**kwargs)(fn)
        return fn

    if len(args) == 1 and callable(args[0]):
        return wrap(args[0])
    return wrap


def backend():
    return "numba" if USE_NUMBA else "numpy"
