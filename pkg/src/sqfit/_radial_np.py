"""Vectorized numpy implementation of the radial-residual kernel.

This is the pure-Python fallback for the compiled extension; both must
produce identical results (see tests/test_kernels.py).
"""

from __future__ import annotations

import numpy as np

from .geometry import euler_to_matrix

MODE_RIGID = 0
MODE_TAPER = 1
MODE_BEND = 2

_TAPER_EPS = 1e-12
_ORIGIN_EPS = 1e-12


def radial_residuals(points: np.ndarray, theta: np.ndarray, mode: int) -> np.ndarray:
    """Radial distance |1 - F^(-eps1/2)| * ||p_c|| for every point.

    ``theta`` is [eps1, eps2, ax, ay, az, ra, rb, rc, tx, ty, tz] plus
    (kx, ky) for taper mode or (kappa, alpha) for bend mode. Points whose
    canonical image lands at the origin get residual min(size); points on
    the taper singular plane use a sign-preserving 1e-12 clamp.
    """
    eps1, eps2 = theta[0], theta[1]
    size = theta[2:5]
    R = euler_to_matrix(theta[5], theta[6], theta[7])
    p = (points - theta[8:11]) @ R  # rows become R^T (x - t)

    if mode == MODE_TAPER:
        kx, ky = theta[11], theta[12]
        z = p[:, 2]
        fx = kx / size[2] * z + 1.0
        fy = ky / size[2] * z + 1.0
        fx = np.where(np.abs(fx) < _TAPER_EPS, np.copysign(_TAPER_EPS, fx), fx)
        fy = np.where(np.abs(fy) < _TAPER_EPS, np.copysign(_TAPER_EPS, fy), fy)
        p[:, 0] /= fx
        p[:, 1] /= fy
    elif mode == MODE_BEND:
        kappa, alpha = theta[11], theta[12]
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        Rb = np.cos(alpha - np.arctan2(y, x)) * np.hypot(x, y)
        inv_k = 1.0 / kappa
        gamma = np.arctan2(z, inv_k - Rb)
        r = inv_k - np.hypot(z, inv_k - Rb)
        p = np.column_stack(
            (x - np.cos(alpha) * (Rb - r), y - np.sin(alpha) * (Rb - r), gamma * inv_k)
        )

    norm = np.linalg.norm(p, axis=1)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        tx = np.abs(p[:, 0] / size[0]) ** (2.0 / eps2)
        ty = np.abs(p[:, 1] / size[1]) ** (2.0 / eps2)
        tz = np.abs(p[:, 2] / size[2]) ** (2.0 / eps1)
        F = (tx + ty) ** (eps2 / eps1) + tz
        s = F ** (-eps1 / 2.0)
    res = np.abs(1.0 - s) * norm
    fallback = float(np.min(size))
    bad = (norm < _ORIGIN_EPS) | ~np.isfinite(res)
    return np.where(bad, fallback, res)
