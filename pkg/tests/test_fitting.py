import math

import numpy as np
import pytest

from sqfit.errors import DegenerateCloud, TooFewPoints
from sqfit.fitting import (
    closed_form_membership,
    FitConfig,
    ModeSpec,
    denormalize_model,
    fit,
    normalize_cloud,
    objective,
    parameter_bounds,
    pca_initialize,
    update_membership,
    update_sigma,
)
from sqfit.geometry import (
    Bend,
    SuperquadricModel,
    Taper,
    euler_to_matrix,
    sample_surface,
)
from sqfit.metrics import fit_error


def _cloud(rng, n=100):
    return rng.uniform(-1, 1, size=(n, 3)) * np.array([2.0, 1.0, 0.5]) + 3.0


class TestNormalize:
    def test_range_and_centering(self):
        rng = np.random.default_rng(20)
        pts = _cloud(rng)
        norm, rec = normalize_cloud(pts)
        assert np.max(np.abs(norm)) == pytest.approx(1.0)
        np.testing.assert_allclose(norm.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(rec.offset + rec.scale * norm, pts, atol=1e-12)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            normalize_cloud(np.zeros((5, 3)) + np.arange(15).reshape(5, 3))

    def test_planar_cloud_rejected(self):
        rng = np.random.default_rng(21)
        pts = rng.uniform(-1, 1, size=(50, 3))
        pts[:, 2] = 0.0
        with pytest.raises(DegenerateCloud):
            normalize_cloud(pts)

    def test_nonfinite_rejected(self):
        pts = np.ones((20, 3))
        pts[0, 0] = np.nan
        with pytest.raises(ValueError):
            normalize_cloud(pts)


class TestDenormalize:
    def test_round_trip_geometry(self):
        rng = np.random.default_rng(22)
        truth = SuperquadricModel(
            0.8, 1.2, (1.0, 0.6, 1.5), (0.4, -0.3, 0.9), (5.0, -2.0, 1.0)
        )
        pts = sample_surface(truth, target_spacing=0.1)
        norm, rec = normalize_cloud(pts)
        # a model fit in the normalized frame, mapped back, must score the
        # original points identically (scaled) to how it scores normalized ones
        m_norm = SuperquadricModel(
            0.8,
            1.2,
            tuple(np.asarray(truth.size) / rec.scale),
            truth.rotation,
            tuple((np.asarray(truth.translation) - rec.offset) / rec.scale),
        )
        back = denormalize_model(m_norm, rec)
        assert back.size == pytest.approx(truth.size, rel=1e-12)
        assert back.translation == pytest.approx(truth.translation, rel=1e-9)

    def test_bend_curvature_scaling(self):
        rec_scale = 4.0
        m = SuperquadricModel(
            0.5, 1.0, (1, 1, 1), deformation=Bend(kappa=0.2, alpha=0.3)
        )
        from sqfit.fitting import NormalizationRecord

        rec = NormalizationRecord(scale=rec_scale, offset=np.zeros(3))
        back = denormalize_model(m, rec)
        assert back.deformation.kappa == pytest.approx(0.05)
        assert back.deformation.alpha == pytest.approx(0.3)


class TestPcaInit:
    def test_rotation_proper(self):
        rng = np.random.default_rng(23)
        pts = _cloud(rng)
        for mode in ("rigid", "taper", "bend"):
            theta = pca_initialize(pts, mode)
            spec = ModeSpec(mode)
            full = spec.expand(theta)
            R = euler_to_matrix(*full[5:8])
            assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)
            np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-9)

    def test_translation_is_centroid(self):
        rng = np.random.default_rng(24)
        pts = _cloud(rng)
        full = ModeSpec("rigid").expand(pca_initialize(pts, "rigid"))
        np.testing.assert_allclose(full[8:11], pts.mean(axis=0), atol=1e-12)

    def test_sizes_floor(self):
        rng = np.random.default_rng(25)
        pts = rng.uniform(-1, 1, size=(50, 3)) * np.array([1.0, 1.0, 1e-6])
        pts += rng.normal(scale=1e-7, size=pts.shape)
        full = ModeSpec("rigid").expand(pca_initialize(pts, "rigid"))
        assert np.all(full[2:5] >= 1e-3)

    def test_axis_assignments_cycle(self):
        rng = np.random.default_rng(26)
        pts = _cloud(rng)
        spec = ModeSpec("rigid")
        locals_z = []
        for a in range(3):
            full = spec.expand(pca_initialize(pts, "rigid", a))
            locals_z.append(euler_to_matrix(*full[5:8])[:, 2])
        # the three local z-axes are mutually (nearly) orthogonal
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(locals_z[i] @ locals_z[j]) < 1e-6

    def test_bend_mode_exponents(self):
        rng = np.random.default_rng(27)
        full = ModeSpec("bend").expand(pca_initialize(_cloud(rng), "bend"))
        assert full[0] == pytest.approx(0.01)
        assert full[1] == pytest.approx(1.0)
        assert full[11] == pytest.approx(0.1)
        assert full[12] == pytest.approx(math.pi / 4)


class TestBounds:
    def test_rigid_bounds(self):
        pts = np.ones((20, 3)) * 0.5
        lo, hi = parameter_bounds("rigid", pts)
        assert len(lo) == len(hi) == 11
        assert hi[2] == pytest.approx(2.0)  # 4 * max|coord|
        assert np.all(lo < hi)
        assert hi[0] == hi[1] == 2.0
        assert lo[0] == lo[1] == pytest.approx(1e-4)

    def test_deformation_bounds(self):
        pts = np.ones((20, 3))
        lo, hi = parameter_bounds("taper", pts)
        assert len(lo) == 13
        assert lo[11] == lo[12] == -1.0 and hi[11] == hi[12] == 1.0
        lo, hi = parameter_bounds("bend", pts)
        assert lo[11] == pytest.approx(1e-4)
        assert hi[12] == pytest.approx(math.pi / 2)

    def test_fixed_exponents_removed(self):
        pts = np.ones((20, 3))
        lo, _ = parameter_bounds("cylinder", pts)
        assert len(lo) == 9


class TestClosedForms:
    # oracle values computed independently, straight from the update formulas
    RES = np.array([0.1, 0.4, 0.9, 0.05])
    SIGMA2 = 0.09

    def test_membership_oracle(self):
        cfg = FitConfig(lam=3.0, outlier_weight=0.1)
        u = update_membership(self.RES, self.SIGMA2, cfg, volume=8.0)
        np.testing.assert_allclose(
            u,
            [
                0.9940380812086409,
                0.9896547389381722,
                0.8959879475305721,
                0.9942004638537617,
            ],
            rtol=1e-12,
        )

    def test_membership_no_outlier_component(self):
        cfg = FitConfig(lam=3.0, outlier_weight=0.0)
        u = update_membership(self.RES, self.SIGMA2, cfg, volume=8.0)
        np.testing.assert_array_equal(u, np.ones(4))

    def test_membership_range(self):
        rng = np.random.default_rng(28)
        cfg = FitConfig(lam=3.0, outlier_weight=0.1)
        for _ in range(100):
            res = rng.uniform(0, 5, size=30)
            s2 = rng.uniform(1e-6, 2.0)
            u = update_membership(res, s2, cfg, volume=8.0)
            assert np.all(u > 0) and np.all(u <= 1.0)

    def test_sigma_oracle(self):
        u = np.array([0.9, 0.5, 0.1, 0.99])
        assert update_sigma(u, self.RES, 1e-12) == pytest.approx(
            0.02308902275769746, rel=1e-12
        )

    def test_sigma_floor(self):
        assert update_sigma(np.ones(4), np.zeros(4), 1e-12) == 1e-12

    def test_objective_oracle(self):
        u = np.array([0.9, 0.5, 0.1, 0.99])
        got = objective(u, self.RES, self.SIGMA2, 3.0)
        assert got == pytest.approx(-7.760165118674177, rel=1e-12)

    def test_membership_minimizes_objective(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            res = rng.uniform(0, 1.0, size=25)
            s2 = rng.uniform(1.0, 2.0)  # keeps the closed form inside (0, 1]
            u_star = closed_form_membership(res, s2, 3.0)
            assert np.all(u_star <= 1.0)
            best = objective(u_star, res, s2, 3.0)
            for _ in range(200):
                u = np.clip(rng.uniform(1e-6, 1.0, size=25), 1e-6, 1.0)
                assert objective(u, res, s2, 3.0) >= best - 1e-12

    def test_sigma_minimizes_objective(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            res = rng.uniform(0.05, 1.0, size=25)
            u = rng.uniform(0.1, 1.0, size=25)
            s_star = update_sigma(u, res, 1e-12)
            best = objective(u, res, s_star, 3.0)
            for f in (0.9, 0.95, 1.05, 1.1):
                assert objective(u, res, f * s_star, 3.0) >= best


class TestFit:
    def test_rigid_recovery(self):
        truth = SuperquadricModel(
            0.8, 1.2, (1.0, 0.6, 1.5), (0.4, -0.3, 0.9), (0.2, -0.1, 0.3)
        )
        pts = sample_surface(truth, target_spacing=0.15)
        result = fit(pts, FitConfig(mode="rigid"))
        assert result.status in ("converged", "max-iters")
        assert result.mean_residual < 1e-4
        report = fit_error(pts, result.model, k=20_000)
        assert report.mean_dist < 0.02

    def test_loss_trace_non_increasing(self):
        truth = SuperquadricModel(1.0, 0.5, (1.0, 1.0, 0.8))
        pts = sample_surface(truth, target_spacing=0.15)
        result = fit(pts, FitConfig(mode="rigid", multi_init=False))
        trace = result.loss_trace
        assert all(b <= a + 1e-10 for a, b in zip(trace, trace[1:]))

    def test_sphere_mode(self):
        truth = SuperquadricModel(1.0, 1.0, (1.2, 1.2, 1.2), translation=(1, 2, 3))
        pts = sample_surface(truth, target_spacing=0.15)
        result = fit(pts, FitConfig(mode="sphere"))
        m = result.model
        assert m.eps1 == 1.0 and m.eps2 == 1.0
        assert m.size[0] == m.size[1] == m.size[2]
        assert m.size[0] == pytest.approx(1.2, rel=0.02)
        np.testing.assert_allclose(m.translation, [1, 2, 3], atol=0.05)

    def test_cylinder_mode(self):
        truth = SuperquadricModel(0.01, 1.0, (0.7, 0.7, 1.8))
        pts = sample_surface(truth, target_spacing=0.15)
        result = fit(pts, FitConfig(mode="cylinder"))
        m = result.model
        assert m.eps1 == pytest.approx(0.01)
        assert m.eps2 == pytest.approx(1.0)
        assert m.size[0] == m.size[1]
        assert m.size[0] == pytest.approx(0.7, rel=0.05)

    def test_taper_recovery(self):
        truth = SuperquadricModel(
            1.0, 1.0, (0.8, 0.8, 1.4), deformation=Taper(kx=0.6, ky=0.6)
        )
        pts = sample_surface(truth, target_spacing=0.12)
        result = fit(pts, FitConfig(mode="taper"))
        assert isinstance(result.model.deformation, Taper)
        assert result.mean_residual < 5e-3

    def test_bend_recovery(self):
        truth = SuperquadricModel(
            0.3, 1.0, (0.5, 0.5, 1.6), deformation=Bend(kappa=0.25, alpha=0.5)
        )
        pts = sample_surface(truth, target_spacing=0.12)
        result = fit(pts, FitConfig(mode="bend"))
        assert isinstance(result.model.deformation, Bend)
        norm_scale = np.abs(pts - pts.mean(axis=0)).max()
        report = fit_error(pts, result.model, k=20_000)
        assert report.mean_dist / norm_scale < 0.1

    def test_multi_init_reported(self):
        truth = SuperquadricModel(1.0, 1.0, (0.5, 0.5, 2.0))
        pts = sample_surface(truth, target_spacing=0.15)
        result = fit(pts, FitConfig(mode="rigid"))
        assert result.chosen_init in (0, 1, 2)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FitConfig(lam=-1.0)
        with pytest.raises(ValueError):
            FitConfig(outlier_weight=1.5)
        with pytest.raises(ValueError):
            FitConfig(mode="banana")
