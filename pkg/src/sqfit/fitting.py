"""Alternating fit: closed-form membership and variance updates wrapped
around a bounded trust-region parameter step, with PCA initialization,
cloud normalization, and optional three-axis reinitialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateCloud, NonFiniteResidual, TooFewPoints
from .geometry import (
    Bend,
    SuperquadricModel,
    Taper,
    euler_to_matrix,
    matrix_to_euler,
)
from .solver import BoundedProblem, SolverOptions, minimize

MIN_POINTS = 13  # over-determines the 11 rigid parameters

MODE_RIGID = "rigid"
MODE_TAPER = "taper"
MODE_BEND = "bend"
MODE_SPHERE = "sphere"
MODE_CYLINDER = "cylinder"
MODE_ELLIPSOID = "ellipsoid"
ALL_MODES = (MODE_RIGID, MODE_TAPER, MODE_BEND, MODE_SPHERE, MODE_CYLINDER, MODE_ELLIPSOID)

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max-iters"


@dataclass
class FitConfig:
    lam: float = 3.0  # entropy-regularization weight
    outlier_weight: float = 0.1
    mode: str = MODE_RIGID
    outer_tol: float = 1e-3
    max_outer_iters: int = 50
    max_inner_iters: int = 25
    multi_init: bool = True
    sigma_floor: float = 1e-12

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not 0.0 <= self.outlier_weight < 1.0:
            raise ValueError("outlier_weight must be in [0, 1)")
        if self.mode not in ALL_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.outer_tol <= 0 or self.sigma_floor <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class NormalizationRecord:
    scale: float
    offset: np.ndarray


@dataclass
class FitState:
    u: np.ndarray
    sigma2: float
    theta: np.ndarray  # full kernel parameter vector, normalized frame
    loss: float


@dataclass
class FitResult:
    model: SuperquadricModel
    final_state: FitState
    loss_trace: list
    status: str
    chosen_init: int
    outer_iterations: int
    normalization: NormalizationRecord
    mean_residual: float = 0.0


class ModeSpec:
    """Maps the reduced (optimized) parameter vector to the full kernel
    theta, fixing shape exponents for the type-specific modes."""

    def __init__(self, mode: str):
        self.mode = mode
        if mode in (MODE_RIGID, MODE_SPHERE, MODE_CYLINDER, MODE_ELLIPSOID):
            self.kernel_mode = kernels.MODE_RIGID
            self.full_len = 11
        elif mode == MODE_TAPER:
            self.kernel_mode = kernels.MODE_TAPER
            self.full_len = 13
        else:
            self.kernel_mode = kernels.MODE_BEND
            self.full_len = 13
        if mode == MODE_CYLINDER:
            self.fixed = {0: 0.01, 1: 1.0}
        elif mode in (MODE_SPHERE, MODE_ELLIPSOID):
            self.fixed = {0: 1.0, 1: 1.0}
        else:
            self.fixed = {}
        self.free = np.array([i for i in range(self.full_len) if i not in self.fixed])

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        full = np.empty(self.full_len)
        full[self.free] = reduced
        for i, v in self.fixed.items():
            full[i] = v
        return full

    def reduce(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full, dtype=float)[self.free]

    def residuals(self, points: np.ndarray, reduced: np.ndarray) -> np.ndarray:
        return kernels.radial_residuals(points, self.expand(reduced), self.kernel_mode)


def _validated(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (M, 3) array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point cloud contains non-finite coordinates")
    return pts


def normalize_cloud(points) -> tuple[np.ndarray, NormalizationRecord]:
    """Center on the centroid and scale into [-1, 1]^3."""
    pts = _validated(points)
    if len(pts) < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} points, got {len(pts)}")
    offset = pts.mean(axis=0)
    centered = pts - offset
    # reject planar / collinear input up front
    _, svals, _ = np.linalg.svd(centered, full_matrices=False)
    extents = svals / math.sqrt(len(pts))
    if np.min(extents) < 1e-9:
        raise DegenerateCloud("cloud extent vanishes along a principal axis")
    scale = float(np.max(np.abs(centered)))
    return centered / scale, NormalizationRecord(scale=scale, offset=offset)


def denormalize_model(model: SuperquadricModel, rec: NormalizationRecord) -> SuperquadricModel:
    """Undo :func:`normalize_cloud` on a fitted model. Shape exponents,
    angles, and taper factors are scale-invariant; bend curvature scales
    inversely with length."""
    s = rec.scale
    deformation = model.deformation
    if isinstance(deformation, Bend):
        deformation = Bend(kappa=deformation.kappa / s, alpha=deformation.alpha)
    return SuperquadricModel(
        eps1=model.eps1,
        eps2=model.eps2,
        size=tuple(s * a for a in model.size),
        rotation=model.rotation,
        translation=tuple(rec.offset + s * np.asarray(model.translation)),
        deformation=deformation,
    )


def pca_initialize(points: np.ndarray, mode: str, axis_assignment: int = 0) -> np.ndarray:
    """Initial reduced theta: PCA pose, per-axis median sizes, mode-specific
    shape exponents. ``axis_assignment`` cyclically selects which principal
    axis becomes the local z-axis."""
    spec = ModeSpec(mode)
    t0 = points.mean(axis=0)
    centered = points - t0
    cov = centered.T @ centered / len(points)
    evals, evecs = np.linalg.eigh(cov)
    if evals[0] < 1e-18:
        raise DegenerateCloud("singular point covariance")
    order = np.argsort(evals)[::-1]
    axes = evecs[:, order]
    a = axis_assignment % 3
    R = np.column_stack([axes[:, (a + 1) % 3], axes[:, (a + 2) % 3], axes[:, a]])
    if np.linalg.det(R) < 0:
        R[:, 1] = -R[:, 1]
    local = centered @ R
    sizes = np.maximum(np.median(np.abs(local), axis=0), 1e-3)

    eps1, eps2 = (0.01, 1.0) if mode == MODE_BEND else (1.0, 1.0)
    full = np.concatenate([[eps1, eps2], sizes, matrix_to_euler(R), t0])
    if mode == MODE_TAPER:
        full = np.concatenate([full, [0.0, 0.0]])
    elif mode == MODE_BEND:
        full = np.concatenate([full, [0.1, math.pi / 4]])
    return spec.reduce(full)


def parameter_bounds(mode: str, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimization box; the extent bound is 4x the largest |coordinate|."""
    spec = ModeSpec(mode)
    ue = 4.0 * float(np.max(np.abs(points)))
    size_lb = 1e-3 if mode == MODE_TAPER else 1e-5
    lower = np.concatenate(
        [[1e-4, 1e-4], [size_lb] * 3, [-2 * math.pi] * 3, [-ue] * 3]
    )
    upper = np.concatenate([[2.0, 2.0], [ue] * 3, [2 * math.pi] * 3, [ue] * 3])
    if mode == MODE_TAPER:
        lower = np.concatenate([lower, [-1.0, -1.0]])
        upper = np.concatenate([upper, [1.0, 1.0]])
    elif mode == MODE_BEND:
        lower = np.concatenate([lower, [1e-4, 0.0]])
        upper = np.concatenate([upper, [ue, math.pi / 2]])
    return lower[spec.free], upper[spec.free]


def closed_form_membership(residuals: np.ndarray, sigma2: float, lam: float) -> np.ndarray:
    """Unconstrained minimizer of the clustering objective in u:
    u_i = exp(-d_i / lambda) * sigma^(-6/lambda) / (M e) with d_i the
    squared Mahalanobis radial distance."""
    M = len(residuals)
    d = residuals**2 / sigma2
    # evaluated in log space: sigma2**(-3/lam) alone overflows for small
    # sigma2 at small lam; the combined exponent usually does not, and
    # where it still does the saturated inf is handled by the caller
    log_u = -(d + 3.0 * math.log(sigma2)) / lam - math.log(M) - 1.0
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(log_u)


def update_membership(
    residuals: np.ndarray, sigma2: float, config: FitConfig, volume: float
) -> np.ndarray:
    """Membership after balancing against a uniform outlier component.

    The outlier floor is p = w sqrt((2 pi)^3 sigma^6) / ((1 - w) V), and
    the returned value is raw / (raw + p), kept strictly inside (0, 1];
    at w = 0 the ratio collapses to all-ones.
    """
    M = len(residuals)
    lam, w = config.lam, config.outlier_weight
    raw = closed_form_membership(residuals, sigma2, lam)
    if w == 0.0:
        return np.ones(M)
    p_out = w * math.sqrt((2.0 * math.pi) ** 3 * sigma2**3) / ((1.0 - w) * volume)
    with np.errstate(invalid="ignore"):
        u = raw / (raw + p_out)
    u[~np.isfinite(u)] = 1.0  # raw overflow: inlier with certainty
    return np.clip(u, 1e-300, 1.0)


def update_sigma(u: np.ndarray, residuals: np.ndarray, sigma_floor: float) -> float:
    """Closed-form isotropic variance, clamped below at ``sigma_floor``."""
    s2 = float(u @ residuals**2) / (3.0 * float(np.sum(u)))
    return max(s2, sigma_floor)


def objective(u: np.ndarray, residuals: np.ndarray, sigma2: float, lam: float) -> float:
    """Clustering objective: data term + log-determinant + entropy barrier."""
    M = len(u)
    d = residuals**2 / sigma2
    return float(u @ d + np.sum(u) * 3.0 * math.log(sigma2) + lam * (u @ (np.log(u) + math.log(M))))


def update_theta(
    points: np.ndarray,
    u: np.ndarray,
    sigma2: float,
    theta: np.ndarray,
    bounds: tuple[np.ndarray, np.ndarray],
    spec: ModeSpec,
    opts: SolverOptions,
) -> np.ndarray:
    """One bounded weighted-least-squares pass over the shape parameters."""
    weights = np.sqrt(u) / math.sqrt(sigma2)

    def residual_fn(th):
        return weights * spec.residuals(points, th)

    try:
        report = minimize(BoundedProblem(residual_fn, bounds[0], bounds[1], theta), opts)
    except NonFiniteResidual:
        report = minimize(
            BoundedProblem(residual_fn, bounds[0], bounds[1], theta + 1e-6), opts
        )
    return report.theta


def _postprocess(full_theta: np.ndarray, spec: ModeSpec) -> SuperquadricModel:
    eps1, eps2 = full_theta[0], full_theta[1]
    size = full_theta[2:5].copy()
    if spec.mode == MODE_SPHERE:
        size[:] = size.mean()
    elif spec.mode == MODE_CYLINDER:
        size[0] = size[1] = 0.5 * (size[0] + size[1])
    deformation = None
    if spec.mode == MODE_TAPER:
        deformation = Taper(kx=full_theta[11], ky=full_theta[12])
    elif spec.mode == MODE_BEND:
        deformation = Bend(kappa=full_theta[11], alpha=full_theta[12])
    return SuperquadricModel(
        eps1=float(eps1),
        eps2=float(eps2),
        size=tuple(size),
        rotation=tuple(full_theta[5:8]),
        translation=tuple(full_theta[8:11]),
        deformation=deformation,
    )


def fit(points, config: FitConfig | None = None) -> FitResult:
    """Full pipeline: normalize, initialize, alternate (u, theta, sigma)
    until the relative objective change drops below the threshold, then
    denormalize the winning initialization."""
    config = config or FitConfig()
    normalized, rec = normalize_cloud(points)
    M = len(normalized)
    extent = normalized.max(axis=0) - normalized.min(axis=0)
    volume = float(np.prod(extent))
    spec = ModeSpec(config.mode)
    bounds = parameter_bounds(config.mode, normalized)
    solver_opts = SolverOptions(max_iter=config.max_inner_iters)

    assignments = (0, 1, 2) if config.multi_init else (0,)
    best = None
    for assignment in assignments:
        theta = pca_initialize(normalized, config.mode, assignment)
        sigma2 = volume ** (1.0 / 3.0)
        residuals = spec.residuals(normalized, theta)
        trace: list[float] = []
        status = STATUS_MAX_ITERS
        u = np.ones(M)
        for _ in range(config.max_outer_iters):
            u = update_membership(residuals, sigma2, config, volume)
            theta = update_theta(normalized, u, sigma2, theta, bounds, spec, solver_opts)
            residuals = spec.residuals(normalized, theta)
            sigma2 = update_sigma(u, residuals, config.sigma_floor)
            loss = objective(u, residuals, sigma2, config.lam)
            trace.append(loss)
            if len(trace) >= 2:
                prev = trace[-2]
                if abs(prev - loss) < config.outer_tol * max(abs(prev), 1e-12):
                    status = STATUS_CONVERGED
                    break
        mean_res = float(np.mean(residuals))
        candidate = (mean_res, assignment, theta, u, sigma2, trace, status)
        if best is None or mean_res < best[0]:
            best = candidate

    mean_res, assignment, theta, u, sigma2, trace, status = best
    full = spec.expand(theta)
    model = _postprocess(full, spec)
    state = FitState(u=u, sigma2=sigma2, theta=full, loss=trace[-1])
    return FitResult(
        model=denormalize_model(model, rec),
        final_state=state,
        loss_trace=trace,
        status=status,
        chosen_init=assignment,
        outer_iterations=len(trace),
        normalization=rec,
        mean_residual=mean_res,
    )
