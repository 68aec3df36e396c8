"""Selects the radial-residual kernel at import time.

The compiled extension is preferred; the numpy implementation is the
fallback. Set SQFIT_KERNEL=numpy (or =cython) to force a backend, e.g.
for the benchmark in benchmarks/bench_kernels.py.
"""

from __future__ import annotations

import os

import numpy as np

from . import _radial_np

MODE_RIGID = _radial_np.MODE_RIGID
MODE_TAPER = _radial_np.MODE_TAPER
MODE_BEND = _radial_np.MODE_BEND

_forced = os.environ.get("SQFIT_KERNEL", "").lower()

if _forced == "numpy":
    _impl = _radial_np
    BACKEND = "numpy"
else:
    try:
        from . import _radial_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _radial_np
        BACKEND = "numpy"


# Below this batch size the compiled loop wins (per-call overhead of the
# vectorized path dominates); above it numpy's SIMD pow is faster. Only
# consulted when the backend was not forced via SQFIT_KERNEL.
_NUMPY_CUTOVER = 512


def radial_residuals(points: np.ndarray, theta: np.ndarray, mode: int) -> np.ndarray:
    """Per-point radial distance to the surface described by ``theta``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    impl = _impl
    if not _forced and len(points) >= _NUMPY_CUTOVER:
        impl = _radial_np
    return np.asarray(impl.radial_residuals(points, theta, mode))
