"""Backend selection for the compiled kernels.

Numba is used when importable unless ``RMTLIMITS_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs its pure-numpy twin. The flag is
read once at import time.
"""
import os

_FLAG = os.environ.get("RMTLIMITS_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by RMTLIMITS_DISABLE_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if HAS_NUMBA else "numpy"
