"""JIT switch for the hot kernels.

Set ``CHAIN_LAB_DISABLE_JIT=1`` to run the pure-numpy fallbacks even when
numba is importable.
"""

import os
import warnings

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_FALSY = ("", "0", "false", "no", "off")

DISABLE_JIT = os.environ.get("CHAIN_LAB_DISABLE_JIT", "0").strip().lower() not in _FALSY
USE_NUMBA = HAVE_NUMBA and not DISABLE_JIT

NUMBA_OPTS = {"cache": True, "nogil": True}


def optional_njit(func):
    """njit ``func`` when numba is available, else return it untouched."""
    if HAVE_NUMBA:
        return numba.njit(**NUMBA_OPTS)(func)
    return func  # pragma: no cover


def set_threads(count):
    """Cap numba's worker pool; a no-op without numba."""
    if HAVE_NUMBA and count:
        with warnings.catch_warnings():
            # threading-layer probing warns about an old TBB and falls back
            warnings.simplefilter("ignore", numba.NumbaWarning)
            numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))
