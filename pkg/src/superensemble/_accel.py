"""Kernel backend selection.

Hot loops (split scanning, tree traversal, RBF gradient accumulation) exist in
two forms: a numba ``@njit`` kernel and a vectorized numpy equivalent. The
numba path is used when numba imports cleanly, unless the environment sets
``SUPERENSEMBLE_NO_NUMBA=1``. Both paths are deterministic; they may differ
from each other in the last ulp, so reproducibility holds per backend.
"""

import os

_DISABLED = os.environ.get("SUPERENSEMBLE_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by SUPERENSEMBLE_NO_NUMBA")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None


def njit(func):
    """Compile ``func`` with numba when available; otherwise return it untouched."""
    if HAS_NUMBA:
        return _njit(cache=True, nogil=True)(func)
    return func


def backend():
    return "numba" if HAS_NUMBA else "numpy"
