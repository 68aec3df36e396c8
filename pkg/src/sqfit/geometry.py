"""Superquadric geometry: implicit/parametric evaluation, taper/bend
deformations and their inverses, radial closest-point projection, and
near-equal-arclength surface sampling.

All functions here are pure; the canonical frame is the object-centered,
axis-aligned, undeformed frame. Points are float64 ndarrays of shape (3,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BendOutOfRange,
    DegenerateOrigin,
    DegenerateTaperPlane,
    InvalidSpacing,
)

_TAPER_EPS = 1e-12
_ORIGIN_EPS = 1e-12


@dataclass
class Taper:
    """Linear taper of the x/y cross-sections along z; kx, ky in [-1, 1]."""

    kx: float
    ky: float


@dataclass
class Bend:
    """Circular bend of the z-axis: curvature kappa > 0, direction alpha
    in the x-y plane (radians)."""

    kappa: float
    alpha: float


Deformation = Taper | Bend | None


@dataclass
class SuperquadricModel:
    """Full parameter set: shape exponents, semi-axes, pose, deformation.

    ``rotation`` holds extrinsic x-y-z Euler angles, i.e. the rotation
    matrix is Rz(c) @ Ry(b) @ Rx(a) for rotation = (a, b, c).
    """

    eps1: float
    eps2: float
    size: tuple[float, float, float]
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    deformation: Deformation = None

    def rotation_matrix(self) -> np.ndarray:
        return euler_to_matrix(*self.rotation)

    def with_pose(self, rotation, translation) -> "SuperquadricModel":
        return replace(self, rotation=tuple(rotation), translation=tuple(translation))


def euler_to_matrix(a: float, b: float, c: float) -> np.ndarray:
    """Rotation matrix Rz(c) @ Ry(b) @ Rx(a)."""
    ca, sa = math.cos(a), math.sin(a)
    cb, sb = math.cos(b), math.sin(b)
    cc, sc = math.cos(c), math.sin(c)
    return np.array(
        [
            [cc * cb, cc * sb * sa - sc * ca, cc * sb * ca + sc * sa],
            [sc * cb, sc * sb * sa + cc * ca, sc * sb * ca - cc * sa],
            [-sb, cb * sa, cb * ca],
        ]
    )


def matrix_to_euler(R: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`euler_to_matrix`; gimbal-locked poses pick a = 0."""
    sb = -R[2, 0]
    sb = min(1.0, max(-1.0, sb))
    b = math.asin(sb)
    if abs(abs(sb) - 1.0) < 1e-12:
        # cos(b) ~ 0: only a +/- c is determined
        a = 0.0
        c = math.atan2(-R[0, 1], R[1, 1])
    else:
        a = math.atan2(R[2, 1], R[2, 2])
        c = math.atan2(R[1, 0], R[0, 0])
    return (a, b, c)


def _spow(base: float, exponent: float) -> float:
    """sign(base) * |base|**exponent (signed power)."""
    if base == 0.0:
        return 0.0
    return math.copysign(abs(base) ** exponent, base)


def implicit_value(eps1: float, eps2: float, size, p) -> float:
    """Inside-outside value F(p): < 1 inside, 1 on the surface, > 1 outside.

    Coordinates are taken in absolute value before the fractional
    exponentiation, so the function is total on finite input.
    """
    ax, ay, az = size
    tx = abs(p[0] / ax) ** (2.0 / eps2)
    ty = abs(p[1] / ay) ** (2.0 / eps2)
    tz = abs(p[2] / az) ** (2.0 / eps1)
    return (tx + ty) ** (eps2 / eps1) + tz


def parametric_point(eps1: float, eps2: float, size, eta: float, omega: float) -> np.ndarray:
    """Surface point at parametric angles (eta, omega), signed-power convention."""
    ax, ay, az = size
    ce = _spow(math.cos(eta), eps1)
    se = _spow(math.sin(eta), eps1)
    co = _spow(math.cos(omega), eps2)
    so = _spow(math.sin(omega), eps2)
    return np.array([ax * ce * co, ay * ce * so, az * se])


def apply_taper(k, a_z: float, p) -> np.ndarray:
    kx, ky = k
    z = p[2]
    fx = kx / a_z * z + 1.0
    fy = ky / a_z * z + 1.0
    return np.array([fx * p[0], fy * p[1], z])


def inverse_taper(k, a_z: float, q) -> np.ndarray:
    kx, ky = k
    z = q[2]
    fx = kx / a_z * z + 1.0
    fy = ky / a_z * z + 1.0
    if abs(fx) < _TAPER_EPS or abs(fy) < _TAPER_EPS:
        raise DegenerateTaperPlane(f"taper scale vanishes at z={z!r}")
    return np.array([q[0] / fx, q[1] / fy, z])


def apply_bend(kappa: float, alpha: float, p) -> np.ndarray:
    """Bend the z-axis onto a circular arc of curvature kappa toward alpha."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    r = math.cos(alpha - math.atan2(y, x)) * math.hypot(x, y)
    gamma = z * kappa
    R = 1.0 / kappa - math.cos(gamma) * (1.0 / kappa - r)
    return np.array(
        [
            x + math.cos(alpha) * (R - r),
            y + math.sin(alpha) * (R - r),
            math.sin(gamma) * (1.0 / kappa - r),
        ]
    )


def inverse_bend(kappa: float, alpha: float, q) -> np.ndarray:
    x, y, z = float(q[0]), float(q[1]), float(q[2])
    R = math.cos(alpha - math.atan2(y, x)) * math.hypot(x, y)
    gamma = math.atan2(z, 1.0 / kappa - R)
    if abs(gamma) > math.pi / 2:
        raise BendOutOfRange(f"recovered bend angle {gamma!r} outside principal branch")
    r = 1.0 / kappa - math.hypot(z, 1.0 / kappa - R)
    return np.array(
        [
            x - math.cos(alpha) * (R - r),
            y - math.sin(alpha) * (R - r),
            gamma / kappa,
        ]
    )


def _apply_deformation(deformation: Deformation, a_z: float, p) -> np.ndarray:
    if deformation is None:
        return np.asarray(p, dtype=float)
    if isinstance(deformation, Taper):
        return apply_taper((deformation.kx, deformation.ky), a_z, p)
    return apply_bend(deformation.kappa, deformation.alpha, p)


def _invert_deformation(deformation: Deformation, a_z: float, q) -> np.ndarray:
    if deformation is None:
        return np.asarray(q, dtype=float)
    if isinstance(deformation, Taper):
        return inverse_taper((deformation.kx, deformation.ky), a_z, q)
    return inverse_bend(deformation.kappa, deformation.alpha, q)


def world_to_canonical(model: SuperquadricModel, x) -> np.ndarray:
    """Inverse rigid transform first, then the inverse deformation."""
    R = model.rotation_matrix()
    local = R.T @ (np.asarray(x, dtype=float) - np.asarray(model.translation))
    return _invert_deformation(model.deformation, model.size[2], local)


def canonical_to_world(model: SuperquadricModel, p) -> np.ndarray:
    R = model.rotation_matrix()
    deformed = _apply_deformation(model.deformation, model.size[2], p)
    return R @ deformed + np.asarray(model.translation)


def radial_project(model: SuperquadricModel, x) -> tuple[np.ndarray, float]:
    """Closest surface point along the canonical radial ray, plus the
    radial distance |1 - s| * ||p_c|| measured in the canonical frame."""
    p = world_to_canonical(model, x)
    norm = float(np.linalg.norm(p))
    if norm < _ORIGIN_EPS:
        raise DegenerateOrigin("radial projection undefined at the canonical origin")
    F = implicit_value(model.eps1, model.eps2, model.size, p)
    s = F ** (-model.eps1 / 2.0)
    surface = canonical_to_world(model, s * p)
    return surface, abs(1.0 - s) * norm


_STEP_MIN = 1e-4
_STEP_MAX = 0.5
_PROBE_OMEGAS = np.array([-math.pi + i * (2.0 * math.pi / 16.0) for i in range(16)])
_GRID_N = 1024


def _spow_arr(x: np.ndarray, e: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** e


def _eta_density(eps1, eps2, size, etas: np.ndarray) -> np.ndarray:
    """max over omega probes of ||dx/d eta|| at each eta."""
    ax, ay, az = size
    ce, se = np.cos(etas), np.sin(etas)
    with np.errstate(divide="ignore", over="ignore"):
        fac = eps1 * np.abs(ce) ** (eps1 - 1.0) * se
        dz = az * eps1 * np.abs(se) ** (eps1 - 1.0) * ce
    best = np.zeros_like(etas)
    for om in _PROBE_OMEGAS:
        dx = ax * fac * _spow(math.cos(om), eps2)
        dy = ay * fac * _spow(math.sin(om), eps2)
        best = np.maximum(best, np.sqrt(dx * dx + dy * dy + dz * dz))
    return best


def _omega_density(eps1, eps2, size, eta: float, omegas: np.ndarray) -> np.ndarray:
    """||dx/d omega|| along one latitude ring."""
    ax, ay, _ = size
    pce = _spow(math.cos(eta), eps1)
    co, so = np.cos(omegas), np.sin(omegas)
    with np.errstate(divide="ignore", over="ignore"):
        dx = ax * pce * eps2 * np.abs(co) ** (eps2 - 1.0) * so
        dy = ay * pce * eps2 * np.abs(so) ** (eps2 - 1.0) * co
    return np.hypot(dx, dy)


def _arc_positions(grid: np.ndarray, density: np.ndarray, spacing: float) -> np.ndarray:
    """Angles spaced ~`spacing` apart in arclength, by inverting the
    cumulative integral of `density` over `grid`; angular increments are
    kept within [_STEP_MIN, _STEP_MAX]."""
    density = np.where(np.isfinite(density), density, np.inf)
    density = np.clip(density, 0.0, spacing / _STEP_MIN)
    cum = np.concatenate(
        [[0.0], np.cumsum(np.diff(grid) * 0.5 * (density[1:] + density[:-1]))]
    )
    total = float(cum[-1])
    if total <= spacing:
        return np.array([0.5 * (grid[0] + grid[-1])])
    n = max(1, int(round(total / spacing)))
    targets = (np.arange(n) + 0.5) * (total / n)
    pos = np.interp(targets, cum, grid)
    pos = pos[np.concatenate([[True], np.diff(pos) >= _STEP_MIN])]
    out = [pos[0]]
    for a, b in zip(pos[:-1], pos[1:]):
        if b - a > _STEP_MAX:
            out.extend(np.linspace(a, b, int(math.ceil((b - a) / _STEP_MAX)) + 1)[1:])
        else:
            out.append(b)
    return np.asarray(out)


def _sample_canonical(eps1, eps2, size, spacing):
    """Canonical-frame samples: equal-arclength latitude rings, each with
    equal-arclength omega positions; both poles appended once."""
    ax, ay, az = size
    eta_grid = np.linspace(-math.pi / 2, math.pi / 2, _GRID_N)
    etas = _arc_positions(eta_grid, _eta_density(eps1, eps2, size, eta_grid), spacing)
    omega_grid = np.linspace(-math.pi, math.pi, _GRID_N)
    rings = [
        np.array([[0.0, 0.0, -az]]),
        np.array([[0.0, 0.0, az]]),
    ]
    for eta in etas:
        omegas = _arc_positions(
            omega_grid, _omega_density(eps1, eps2, size, eta, omega_grid), spacing
        )
        omegas = omegas[omegas < math.pi]  # half-open seam
        pce = _spow(math.cos(eta), eps1)
        pse = _spow(math.sin(eta), eps1)
        co = _spow_arr(np.cos(omegas), eps2)
        so = _spow_arr(np.sin(omegas), eps2)
        rings.append(
            np.column_stack(
                [ax * pce * co, ay * pce * so, np.full(omegas.size, az * pse)]
            )
        )
    return np.concatenate(rings, axis=0)


def sample_surface(
    model: SuperquadricModel,
    target_spacing: float | None = None,
    target_count: int | None = None,
) -> np.ndarray:
    """Near-evenly spaced world-frame samples of the model surface.

    Exactly one of ``target_spacing`` / ``target_count`` must be given.
    Count mode runs a coarse pass to estimate the surface area, then picks
    the spacing that lands within a few percent of the requested count.
    """
    if (target_spacing is None) == (target_count is None):
        raise InvalidSpacing("give exactly one of target_spacing / target_count")
    if target_spacing is not None:
        if target_spacing <= 0:
            raise InvalidSpacing(f"spacing must be positive, got {target_spacing}")
        spacing = float(target_spacing)
    else:
        if target_count <= 0:
            raise InvalidSpacing(f"count must be positive, got {target_count}")
        # coarse pass estimates the area, then calibration passes rescale
        # the spacing until the count lands close to the request
        s0 = max(min(model.size), 1e-3) * 0.5
        n0 = len(_sample_canonical(model.eps1, model.eps2, model.size, s0))
        area = n0 * s0 * s0
        spacing = math.sqrt(area / target_count)
        for _ in range(4):
            n = len(_sample_canonical(model.eps1, model.eps2, model.size, spacing))
            if abs(n - target_count) <= 0.02 * target_count:
                break
            spacing *= math.sqrt(n / target_count)
    canonical = _sample_canonical(model.eps1, model.eps2, model.size, spacing)
    deformed = _apply_deformation_batch(model.deformation, model.size[2], canonical)
    return deformed @ model.rotation_matrix().T + np.asarray(model.translation)


def _apply_deformation_batch(deformation: Deformation, a_z: float, P: np.ndarray):
    if deformation is None:
        return P
    if isinstance(deformation, Taper):
        fx = deformation.kx / a_z * P[:, 2] + 1.0
        fy = deformation.ky / a_z * P[:, 2] + 1.0
        return np.column_stack([fx * P[:, 0], fy * P[:, 1], P[:, 2]])
    kappa, alpha = deformation.kappa, deformation.alpha
    x, y, z = P[:, 0], P[:, 1], P[:, 2]
    r = np.cos(alpha - np.arctan2(y, x)) * np.hypot(x, y)
    gamma = z * kappa
    R = 1.0 / kappa - np.cos(gamma) * (1.0 / kappa - r)
    return np.column_stack(
        [
            x + math.cos(alpha) * (R - r),
            y + math.sin(alpha) * (R - r),
            np.sin(gamma) * (1.0 / kappa - r),
        ]
    )
