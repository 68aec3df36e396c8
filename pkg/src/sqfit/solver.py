"""Box-bounded nonlinear least squares via a dogleg trust region.

Steps are clipped against the box so every iterate stays feasible; the
Jacobian comes from central finite differences (one-sided next to a
bound). Accepted steps strictly decrease the cost, so the reported cost
trace is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteResidual


@dataclass
class BoundedProblem:
    residual_fn: callable
    lower: np.ndarray
    upper: np.ndarray
    theta0: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.theta0 = np.asarray(self.theta0, dtype=float)
        if not np.all(self.lower < self.upper):
            raise ValueError("lower bounds must be strictly below upper bounds")


@dataclass
class SolverOptions:
    gtol: float = 1e-8
    xtol: float = 1e-10
    ftol: float = 1e-10
    max_iter: int = 200


@dataclass
class SolverReport:
    theta: np.ndarray
    cost: float
    iterations: int
    reason: str  # gradient | step | cost-change | max-iter
    cost_trace: list = field(default_factory=list)


def finite_difference_jacobian(fn, theta, lower, upper, base_step=1e-6, r0=None):
    """Central-difference Jacobian, shrinking to one-sided at the box edge
    or when the residual is non-finite on one side of the stencil."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    J = None
    for i in range(n):
        h = max(base_step, base_step * abs(theta[i]))
        hi = min(theta[i] + h, upper[i])
        lo = max(theta[i] - h, lower[i])
        if hi - lo < 1e-15:
            if J is not None:
                J[:, i] = 0.0
            continue
        tp = theta.copy()
        tp[i] = hi
        tm = theta.copy()
        tm[i] = lo
        rp = np.asarray(fn(tp), dtype=float)
        rm = np.asarray(fn(tm), dtype=float)
        # fall back to a one-sided stencil through the current residual
        # when a perturbed point leaves the residual's finite domain
        if r0 is not None:
            if not np.all(np.isfinite(rp)):
                rp, hi = r0, theta[i]
            if not np.all(np.isfinite(rm)):
                rm, lo = r0, theta[i]
        if J is None:
            J = np.empty((rp.size, n))
        J[:, i] = (rp - rm) / (hi - lo) if hi > lo else 0.0
    return J


def _dogleg(g, B, radius):
    """Dogleg step for model m(p) = g.p + 0.5 p'Bp within ||p|| <= radius."""
    gBg = float(g @ B @ g)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros_like(g)
    if gBg <= 0:
        return -radius / gnorm * g
    p_cauchy = -(gnorm**2 / gBg) * g
    try:
        reg = 1e-12 * max(np.trace(B) / B.shape[0], 1.0)
        p_newton = np.linalg.solve(B + reg * np.eye(B.shape[0]), -g)
    except np.linalg.LinAlgError:
        p_newton = p_cauchy
    if np.linalg.norm(p_newton) <= radius:
        return p_newton
    if np.linalg.norm(p_cauchy) >= radius:
        return -radius / gnorm * g
    # walk from the Cauchy point toward the Newton point to the boundary
    d = p_newton - p_cauchy
    a = float(d @ d)
    b = 2.0 * float(p_cauchy @ d)
    c = float(p_cauchy @ p_cauchy) - radius**2
    tau = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return p_cauchy + tau * d


def _projected_gradient(g, theta, lower, upper, tol=1e-12):
    gp = g.copy()
    at_lower = theta - lower <= tol * np.maximum(1.0, np.abs(lower))
    at_upper = upper - theta <= tol * np.maximum(1.0, np.abs(upper))
    gp[at_lower] = np.minimum(gp[at_lower], 0.0)
    gp[at_upper] = np.maximum(gp[at_upper], 0.0)
    return gp


def minimize(problem: BoundedProblem, opts: SolverOptions | None = None) -> SolverReport:
    opts = opts or SolverOptions()
    lb, ub = problem.lower, problem.upper
    margin = 1e-6 * (ub - lb)
    theta = np.clip(problem.theta0, lb + margin, ub - margin)

    r = np.asarray(problem.residual_fn(theta), dtype=float)
    if not np.all(np.isfinite(r)):
        raise NonFiniteResidual("residual is non-finite at the starting point")
    cost = 0.5 * float(r @ r)
    trace = [cost]
    radius = 1.0
    reason = "max-iter"
    it = 0

    for it in range(1, opts.max_iter + 1):
        J = finite_difference_jacobian(problem.residual_fn, theta, lb, ub, r0=r)
        g = J.T @ r
        B = J.T @ J
        gp = _projected_gradient(g, theta, lb, ub)
        if np.linalg.norm(gp, ord=np.inf) < opts.gtol:
            reason = "gradient"
            break

        accepted = False
        ared = 0.0
        while not accepted:
            p = _dogleg(g, B, radius)
            p = np.clip(theta + p, lb, ub) - theta
            step_norm = float(np.linalg.norm(p))
            if step_norm < opts.xtol * (np.linalg.norm(theta) + opts.xtol):
                reason = "step"
                break
            trial = theta + p
            r_trial = np.asarray(problem.residual_fn(trial), dtype=float)
            if np.all(np.isfinite(r_trial)):
                cost_trial = 0.5 * float(r_trial @ r_trial)
                pred = -(float(g @ p) + 0.5 * float(p @ B @ p))
                ared = cost - cost_trial
                rho = ared / pred if pred > 0 else (1.0 if ared > 0 else -1.0)
            else:
                rho = -1.0  # reject non-finite trial points
            if rho < 0.25:
                radius = 0.25 * min(radius, step_norm)
            elif rho > 0.75 and step_norm > 0.9 * radius:
                radius = 2.0 * radius
            if rho > 1e-4 and ared > 0:
                theta = trial
                r = r_trial
                cost = cost_trial
                trace.append(cost)
                accepted = True
            elif radius < 1e-14:
                reason = "step"
                break
        if not accepted:
            break
        if ared < opts.ftol * max(abs(cost), 1e-30):
            reason = "cost-change"
            break

    return SolverReport(theta=theta, cost=cost, iterations=it, reason=reason, cost_trace=trace)
