"""Evaluation metrics and the fuzzy-clustering limit verifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import CoincidentCentroid, InvalidK
from .geometry import SuperquadricModel, sample_surface


@dataclass
class EvalReport:
    mean_dist: float
    median_dist: float
    p25: float
    p75: float
    sample_count: int


def fit_error(points, model: SuperquadricModel, k: int = 10_000) -> EvalReport:
    """Mean distance from each input point to the nearest of ``k`` dense
    surface samples (plus median and quartiles)."""
    if k < 1_000:
        raise InvalidK(f"need at least 1000 surface samples, got {k}")
    samples = sample_surface(model, target_count=k)
    dists, _ = cKDTree(samples).query(np.asarray(points, dtype=float))
    q25, q50, q75 = np.percentile(dists, [25, 50, 75])
    return EvalReport(
        mean_dist=float(np.mean(dists)),
        median_dist=float(q50),
        p25=float(q25),
        p75=float(q75),
        sample_count=len(samples),
    )


def point_to_sphere_distance(x, center, radius: float) -> float:
    """| ||x - c|| - r |, the exact point-to-sphere distance."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return abs(float(np.linalg.norm(np.asarray(x, float) - np.asarray(center, float))) - radius)


def prop1_gap(sample, centroids, r_fuzzy: float) -> tuple[float, float]:
    """Gap between the membership-weighted distance sum and the closest
    squared distance; vanishes as the fuzzy factor approaches 1.

    Uses the reduced form min_d * S^(-1/v) with S = sum (d_j/min_d)^(-v),
    v = 1/(r-1), which stays finite where the naive sum under/overflows.
    Very large distance ratios still underflow in float64 and collapse the
    gap to exactly zero.
    """
    if r_fuzzy <= 1.0:
        raise ValueError("fuzzy factor must exceed 1")
    x = np.asarray(sample, dtype=float)
    V = np.asarray(centroids, dtype=float)
    if len(V) < 2:
        raise ValueError("need at least two centroids")
    d2 = np.sum((V - x) ** 2, axis=1)
    if np.min(d2) < 1e-12:
        raise CoincidentCentroid("a centroid coincides with the sample point")
    v = 1.0 / (r_fuzzy - 1.0)
    dmin = float(np.min(d2))
    with np.errstate(under="ignore"):
        S = float(np.sum((d2 / dmin) ** (-v)))
    weighted = dmin * S ** (-1.0 / v)
    return weighted, dmin


def lemma2_bounds(d: np.ndarray, v: float) -> tuple[float, float, float]:
    """(lower, value, upper) of the power-mean sandwich around min(d)."""
    d = np.asarray(d, dtype=float)
    n = len(d)
    dmin = float(np.min(d))
    with np.errstate(under="ignore"):
        value = dmin * float(np.sum((d / dmin) ** (-v))) ** (-1.0 / v)
    return dmin / n ** (1.0 / v), value, dmin
