"""Backend selection for the compiled kernels.

Every hot loop in the package exists twice: a loop-style kernel compiled
with :func:`numba.njit`, and a vectorised numpy version.  The compiled
kernels are used unless numba is missing or the environment variable
``ELSCAT_DISABLE_NUMBA`` is set to a truthy value before import.
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

_FLAG = "ELSCAT_DISABLE_NUMBA"


def _env_disabled() -> bool:
    value = os.environ.get(_FLAG, "").strip().lower()
    return value not in ("", "0", "false", "no", "off")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged.

    The undecorated function stays reachable as ``fn.py_func`` in both
    cases so tests can compare the compiled and interpreted versions.
    """
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


logger.debug("elscat kernel backend: %s", backend_name())
