# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled radial-residual kernel; semantics match sqfit._radial_np."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, hypot, isfinite, pow, sin, sqrt

cnp.import_array()

MODE_RIGID = 0
MODE_TAPER = 1
MODE_BEND = 2

cdef double _TAPER_EPS = 1e-12
cdef double _ORIGIN_EPS = 1e-12


cdef inline double _apow(double t, double e) nogil:
    # |t|**e with the cheap exponents special-cased
    t = fabs(t)
    if e == 2.0:
        return t * t
    if e == 1.0:
        return t
    if e == 0.5:
        return sqrt(t)
    return pow(t, e)


def radial_residuals(double[:, ::1] points, double[::1] theta, int mode):
    cdef Py_ssize_t M = points.shape[0]
    out_arr = np.empty(M, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef double eps1 = theta[0], eps2 = theta[1]
    cdef double ax = theta[2], ay = theta[3], az = theta[4]
    cdef double ea = theta[5], eb = theta[6], ec = theta[7]
    cdef double tx0 = theta[8], ty0 = theta[9], tz0 = theta[10]

    # R = Rz(ec) @ Ry(eb) @ Rx(ea); rows of R^T are columns of R
    cdef double ca = cos(ea), sa = sin(ea)
    cdef double cb = cos(eb), sb = sin(eb)
    cdef double cc = cos(ec), sc = sin(ec)
    cdef double r00 = cc * cb, r01 = cc * sb * sa - sc * ca, r02 = cc * sb * ca + sc * sa
    cdef double r10 = sc * cb, r11 = sc * sb * sa + cc * ca, r12 = sc * sb * ca - cc * sa
    cdef double r20 = -sb, r21 = cb * sa, r22 = cb * ca

    cdef double kx = 0.0, ky = 0.0, kappa = 0.0, alpha = 0.0, inv_k = 0.0
    cdef double cal = 0.0, sal = 0.0
    if mode == 1:
        kx = theta[11]
        ky = theta[12]
    elif mode == 2:
        kappa = theta[11]
        alpha = theta[12]
        inv_k = 1.0 / kappa
        cal = cos(alpha)
        sal = sin(alpha)

    cdef double e_xy = 2.0 / eps2
    cdef double e_z = 2.0 / eps1
    cdef double e_out = eps2 / eps1
    cdef double e_rad = -eps1 / 2.0

    cdef double fallback = ax
    if ay < fallback:
        fallback = ay
    if az < fallback:
        fallback = az

    cdef Py_ssize_t i
    cdef double dx, dy, dz, px, py, pz, fx, fy, Rb, gamma, rr, norm, F, s, res
    with nogil:
        for i in range(M):
            dx = points[i, 0] - tx0
            dy = points[i, 1] - ty0
            dz = points[i, 2] - tz0
            px = r00 * dx + r10 * dy + r20 * dz
            py = r01 * dx + r11 * dy + r21 * dz
            pz = r02 * dx + r12 * dy + r22 * dz

            if mode == 1:
                fx = kx / az * pz + 1.0
                fy = ky / az * pz + 1.0
                if fabs(fx) < _TAPER_EPS:
                    fx = _TAPER_EPS if fx >= 0.0 else -_TAPER_EPS
                if fabs(fy) < _TAPER_EPS:
                    fy = _TAPER_EPS if fy >= 0.0 else -_TAPER_EPS
                px = px / fx
                py = py / fy
            elif mode == 2:
                Rb = cos(alpha - atan2(py, px)) * hypot(px, py)
                gamma = atan2(pz, inv_k - Rb)
                rr = inv_k - hypot(pz, inv_k - Rb)
                px = px - cal * (Rb - rr)
                py = py - sal * (Rb - rr)
                pz = gamma * inv_k

            norm = sqrt(px * px + py * py + pz * pz)
            F = _apow(_apow(px / ax, e_xy) + _apow(py / ay, e_xy), e_out) + _apow(pz / az, e_z)
            if e_rad == -0.5:
                s = 1.0 / sqrt(F)
            else:
                s = pow(F, e_rad)
            res = fabs(1.0 - s) * norm
            if norm < _ORIGIN_EPS or not isfinite(res):
                res = fallback
            out[i] = res
    return out_arr
