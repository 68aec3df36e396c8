"""Compare the compiled and pure-numpy residual kernels.

Run: python benchmarks/bench_kernels.py [n_points]
"""

from __future__ import annotations

import sys
import time

import numpy as np

from sqfit import _radial_np
from sqfit.kernels import MODE_BEND, MODE_RIGID, MODE_TAPER

try:
    from sqfit import _radial_cy
except ImportError:
    _radial_cy = None


def _theta(mode: int, rng) -> np.ndarray:
    base = [0.7, 1.3, 1.0, 0.8, 1.2, 0.3, -0.2, 0.5, 0.05, -0.03, 0.02]
    if mode == MODE_TAPER:
        base += [0.4, -0.3]
    elif mode == MODE_BEND:
        base += [0.25, 0.6]
    return np.asarray(base) + 0.01 * rng.standard_normal(len(base))


def main() -> None:
    sizes = [int(a) for a in sys.argv[1:]] or [200, 1000, 5000]
    rng = np.random.default_rng(0)
    reps = 100
    print(f"{reps} repetitions per kernel\n")
    print(f"{'mode':8} {'points':>8} {'numpy (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for name, mode in [("rigid", MODE_RIGID), ("taper", MODE_TAPER), ("bend", MODE_BEND)]:
        theta = _theta(mode, rng)
        for n in sizes:
            points = rng.uniform(-1.5, 1.5, size=(n, 3))
            t0 = time.perf_counter()
            for _ in range(reps):
                ref = _radial_np.radial_residuals(points, theta, mode)
            t_np = (time.perf_counter() - t0) / reps * 1e3
            if _radial_cy is None:
                print(f"{name:8} {n:8d} {t_np:12.3f} {'n/a':>12} {'n/a':>8}")
                continue
            t0 = time.perf_counter()
            for _ in range(reps):
                out = _radial_cy.radial_residuals(points, theta, mode)
            t_cy = (time.perf_counter() - t0) / reps * 1e3
            assert np.allclose(ref, out, rtol=1e-10, atol=1e-12), "kernel mismatch"
            print(f"{name:8} {n:8d} {t_np:12.3f} {t_cy:12.3f} {t_np / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
