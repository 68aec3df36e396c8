"""Superquadric fitting for 3D point clouds.

Fits rigid, tapered, and bent superquadrics with a fuzzy-membership
alternating optimizer, and ships a seeded synthetic benchmark generator,
evaluation metrics, point-cloud/model IO, and a CLI (``sqfit``).
"""

from .errors import SqfitError
from .fitting import FitConfig, FitResult, fit
from .geometry import (
    Bend,
    SuperquadricModel,
    Taper,
    implicit_value,
    radial_project,
    sample_surface,
)
from .io import read_cloud, read_model, write_cloud, write_model
from .kernels import BACKEND, radial_residuals
from .metrics import EvalReport, fit_error, lemma2_bounds, prop1_gap

__all__ = [
    "BACKEND",
    "Bend",
    "EvalReport",
    "FitConfig",
    "FitResult",
    "SqfitError",
    "SuperquadricModel",
    "Taper",
    "fit",
    "fit_error",
    "implicit_value",
    "lemma2_bounds",
    "prop1_gap",
    "radial_project",
    "radial_residuals",
    "read_cloud",
    "read_model",
    "sample_surface",
    "write_cloud",
    "write_model",
]

__version__ = "0.1.0"
