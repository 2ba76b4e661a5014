"""Numba switch.

Set ``TPIKIT_DISABLE_NUMBA=1`` to force the pure numpy/Python kernels. When
numba is not importable the fallback is used automatically.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("TPIKIT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("disabled by TPIKIT_DISABLE_NUMBA")
    # prefer OpenMP so parallel kernels stay safe to call from worker threads
    os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")
    import numba as _nb

    NUMBA_ENABLED = True
except ImportError:
    _nb = None
    NUMBA_ENABLED = False


def compile_kernel(fn, **kwargs):
    """Compile ``fn`` with numba if available; returns None otherwise."""
    if _nb is None:
        return None
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return _nb.njit(**kwargs)(fn)


if _nb is not None:
    prange = _nb.prange
else:
    prange = range
