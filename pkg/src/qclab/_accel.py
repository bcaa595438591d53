"""Optional numba acceleration for the hot kernels.

Set the environment variable ``QCLAB_DISABLE_NUMBA=1`` to force the pure
numpy fallbacks (useful for debugging and for the kernel benchmark).
"""

import os

DISABLE_ENV = "QCLAB_DISABLE_NUMBA"


def _env_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip() not in ("", "0", "false", "False")


NUMBA_ENABLED = False

if not _env_disabled():
    try:
        from numba import njit, prange  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        # mirror numba's decorator-with-options calling convention
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range
