"""Seedable synthetic benchmark generator: random superquadrics sampled on
a fixed interval, then occluded, noised, and contaminated with outliers.
Identical GenSpecs produce byte-identical case bundles.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io as sqio
from .geometry import Bend, SuperquadricModel, Taper, matrix_to_euler, sample_surface

GEN_MODES = ("rigid", "taper", "bend")


@dataclass
class GenSpec:
    seed: int
    mode: str = "rigid"
    partial_ratio: float = 1.0
    noise_sigma: float = 0.0
    outlier_ratio: float = 0.0
    sample_interval: float = 0.2
    count: int = 1
    sweep_value: float | None = None  # fixes taper k1=k2 or bend kappa

    def __post_init__(self):
        if self.mode not in GEN_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.partial_ratio <= 1.0:
            raise ValueError("partial_ratio must be in (0, 1]")
        if self.noise_sigma < 0 or self.outlier_ratio < 0:
            raise ValueError("noise_sigma and outlier_ratio must be non-negative")
        if self.sample_interval <= 0 or self.count <= 0:
            raise ValueError("sample_interval and count must be positive")


@dataclass
class GroundTruthCase:
    case_id: int
    model: SuperquadricModel
    clean_points: np.ndarray
    observed_points: np.ndarray
    outlier_flags: np.ndarray  # bool per observed point


def _open_unit(rng, scale=1.0):
    """Uniform sample on the half-open interval (0, scale]."""
    return scale * (1.0 - rng.random())


def _random_rotation(rng) -> tuple[float, float, float]:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    x, y, z = axis
    c, s, C = math.cos(angle), math.sin(angle), 1.0 - math.cos(angle)
    R = np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )
    return matrix_to_euler(R)


def random_model(mode: str, rng: np.random.Generator, sweep_value: float | None = None):
    """Random ground-truth model using the benchmark parameter ranges."""
    size = tuple(rng.uniform(0.5, 3.0, size=3))
    rotation = _random_rotation(rng)
    translation = tuple(rng.uniform(-1.0, 1.0, size=3))
    if mode == "bend":
        eps1 = _open_unit(rng, 0.4)
        eps2 = _open_unit(rng, 2.0)
        kappa = sweep_value if sweep_value is not None else rng.uniform(0.05, 0.3)
        deformation = Bend(kappa=float(kappa), alpha=_open_unit(rng, math.pi / 2))
    else:
        eps1 = _open_unit(rng, 2.0)
        eps2 = _open_unit(rng, 2.0)
        deformation = None
        if mode == "taper":
            if sweep_value is not None:
                deformation = Taper(kx=float(sweep_value), ky=float(sweep_value))
            else:
                deformation = Taper(kx=rng.uniform(0.0, 1.0), ky=rng.uniform(0.0, 1.0))
    return SuperquadricModel(
        eps1=eps1,
        eps2=eps2,
        size=size,
        rotation=rotation,
        translation=translation,
        deformation=deformation,
    )


def occlude(points: np.ndarray, r: float, rng: np.random.Generator) -> np.ndarray:
    """Keep the ceil(r*M) points forming a cap along a random view axis."""
    if not 0.0 < r <= 1.0:
        raise ValueError("partial ratio must be in (0, 1]")
    if r == 1.0:
        return points
    view = rng.normal(size=3)
    view /= np.linalg.norm(view)
    keep = math.ceil(r * len(points))
    proj = points @ view
    idx = np.argsort(-proj)[:keep]
    return points[np.sort(idx)]


def add_noise(points: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0.0:
        return points
    return points + rng.normal(scale=sigma, size=points.shape)


def add_outliers(
    points: np.ndarray, ratio: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Append ceil(ratio*M) uniform points in the 1.5x-inflated bbox;
    returns the extended cloud and a per-point outlier flag."""
    flags = np.zeros(len(points), dtype=bool)
    if ratio == 0.0:
        return points, flags
    n = math.ceil(ratio * len(points))
    lo, hi = points.min(axis=0), points.max(axis=0)
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    half = np.maximum(half * 1.5, 1e-6)
    extra = rng.uniform(center - half, center + half, size=(n, 3))
    return np.vstack([points, extra]), np.concatenate([flags, np.ones(n, dtype=bool)])


def generate_case(spec: GenSpec, case_id: int, rng: np.random.Generator) -> GroundTruthCase:
    model = random_model(spec.mode, rng, spec.sweep_value)
    clean = sample_surface(model, target_spacing=spec.sample_interval)
    observed = occlude(clean, spec.partial_ratio, rng)
    observed = add_noise(observed, spec.noise_sigma, rng)
    observed, flags = add_outliers(observed, spec.outlier_ratio, rng)
    return GroundTruthCase(
        case_id=case_id,
        model=model,
        clean_points=clean,
        observed_points=observed,
        outlier_flags=flags,
    )


def generate(spec: GenSpec):
    """Yield all cases of a spec, each from its own derived seed stream."""
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.count)
    for i, ss in enumerate(seeds):
        yield generate_case(spec, i, np.random.default_rng(ss))


def write_bundle(spec: GenSpec, out_dir) -> Path:
    """Write case_<id>.xyz / case_<id>.truth.json plus manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for case in generate(spec):
        cloud_name = f"case_{case.case_id:04d}.xyz"
        truth_name = f"case_{case.case_id:04d}.truth.json"
        sqio.write_cloud(out / cloud_name, case.observed_points, fmt="xyz")
        truth = {
            "model": sqio.model_to_dict(case.model),
            "spec": asdict(spec),
            "outlier_flags": case.outlier_flags.astype(int).tolist(),
        }
        with open(out / truth_name, "w", encoding="utf-8") as fh:
            json.dump(truth, fh, sort_keys=True, indent=1)
        entries.append({"id": case.case_id, "cloud": cloud_name, "truth": truth_name})
    manifest = {"spec": asdict(spec), "cases": entries}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    return out / "manifest.json"
