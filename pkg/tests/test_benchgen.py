import json
import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from sqfit.benchgen import (
    GenSpec,
    add_noise,
    add_outliers,
    generate,
    occlude,
    random_model,
    write_bundle,
)
from sqfit.geometry import Bend, Taper, implicit_value, world_to_canonical


class TestRandomModel:
    def test_parameter_ranges(self):
        rng = np.random.default_rng(50)
        for _ in range(2000):
            m = random_model("rigid", rng)
            assert 0.0 < m.eps1 <= 2.0 and 0.0 < m.eps2 <= 2.0
            assert all(0.5 <= a <= 3.0 for a in m.size)
            assert all(-1.0 <= t <= 1.0 for t in m.translation)
            assert m.deformation is None

    def test_taper_ranges(self):
        rng = np.random.default_rng(51)
        for _ in range(500):
            m = random_model("taper", rng)
            assert isinstance(m.deformation, Taper)
            assert 0.0 <= m.deformation.kx <= 1.0
            assert 0.0 <= m.deformation.ky <= 1.0

    def test_bend_ranges(self):
        rng = np.random.default_rng(52)
        for _ in range(500):
            m = random_model("bend", rng)
            assert 0.0 < m.eps1 <= 0.4
            assert 0.0 < m.eps2 <= 2.0
            assert isinstance(m.deformation, Bend)
            assert 0.05 <= m.deformation.kappa <= 0.3
            assert 0.0 < m.deformation.alpha <= math.pi / 2

    def test_sweep_value_pins_parameters(self):
        rng = np.random.default_rng(53)
        m = random_model("taper", rng, sweep_value=0.3)
        assert m.deformation.kx == 0.3 and m.deformation.ky == 0.3
        m = random_model("bend", rng, sweep_value=0.15)
        assert m.deformation.kappa == 0.15

    def test_determinism(self):
        a = random_model("rigid", np.random.default_rng(54))
        b = random_model("rigid", np.random.default_rng(54))
        assert a == b


class TestOcclude:
    def test_identity_at_full_ratio(self):
        rng = np.random.default_rng(55)
        pts = rng.uniform(-1, 1, size=(100, 3))
        np.testing.assert_array_equal(occlude(pts, 1.0, rng), pts)

    def test_half_keeps_exact_count(self):
        rng = np.random.default_rng(56)
        pts = rng.uniform(-1, 1, size=(101, 3))
        kept = occlude(pts, 0.5, rng)
        assert len(kept) == math.ceil(101 * 0.5)

    def test_cap_is_one_sided(self):
        rng = np.random.default_rng(57)
        pts = rng.uniform(-1, 1, size=(400, 3))
        kept = occlude(pts, 0.5, np.random.default_rng(57))
        kept_set = {tuple(p) for p in kept}
        dropped = np.array([p for p in pts if tuple(p) not in kept_set])
        # a view-direction cap is linearly separable from the dropped points;
        # the centroid difference recovers (approximately) that direction
        direction = kept.mean(axis=0) - dropped.mean(axis=0)
        direction /= np.linalg.norm(direction)
        assert (kept @ direction).min() > np.median(dropped @ direction)

    def test_connected_cap(self):
        from sqfit.geometry import SuperquadricModel, sample_surface

        rng = np.random.default_rng(58)
        m = SuperquadricModel(1.0, 1.0, (1.0, 1.0, 1.0))
        pts = sample_surface(m, target_spacing=0.2)
        kept = occlude(pts, 0.5, rng)
        d, _ = cKDTree(kept).query(kept, k=2)
        assert d[:, 1].max() < 3 * 0.2

    def test_invalid_ratio(self):
        rng = np.random.default_rng(59)
        with pytest.raises(ValueError):
            occlude(np.ones((10, 3)), 0.0, rng)


class TestNoiseOutliers:
    def test_zero_noise_identity(self):
        pts = np.ones((10, 3))
        out = add_noise(pts, 0.0, np.random.default_rng(60))
        np.testing.assert_array_equal(out, pts)

    def test_noise_std(self):
        rng = np.random.default_rng(61)
        pts = np.zeros((10_000, 3))
        noisy = add_noise(pts, 0.05, rng)
        assert np.std(noisy, axis=0) == pytest.approx([0.05] * 3, rel=0.05)

    def test_outlier_count_and_box(self):
        rng = np.random.default_rng(62)
        pts = rng.uniform(-1, 1, size=(200, 3))
        out, flags = add_outliers(pts, 0.3, rng)
        n_new = math.ceil(0.3 * 200)
        assert len(out) == 200 + n_new
        assert flags.sum() == n_new
        np.testing.assert_array_equal(out[:200], pts)
        center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        half = 0.75 * (pts.max(axis=0) - pts.min(axis=0))  # 1.5x inflation
        injected = out[flags]
        assert np.all(np.abs(injected - center) <= half + 1e-12)

    def test_zero_ratio_identity(self):
        pts = np.ones((10, 3))
        out, flags = add_outliers(pts, 0.0, np.random.default_rng(63))
        np.testing.assert_array_equal(out, pts)
        assert flags.sum() == 0


class TestGenerate:
    def test_determinism(self):
        spec = GenSpec(seed=7, mode="rigid", count=3, noise_sigma=0.01,
                       partial_ratio=0.8, outlier_ratio=0.1)
        a = list(generate(spec))
        b = list(generate(spec))
        for ca, cb in zip(a, b):
            np.testing.assert_array_equal(ca.observed_points, cb.observed_points)
            assert ca.model == cb.model

    def test_clean_points_on_surface(self):
        spec = GenSpec(seed=8, mode="taper", count=2)
        for case in generate(spec):
            m = case.model
            for p in case.clean_points[::7]:
                F = implicit_value(m.eps1, m.eps2, m.size, world_to_canonical(m, p))
                assert abs(F - 1.0) < 1e-6

    def test_case_ids_sequential(self):
        spec = GenSpec(seed=9, count=4)
        assert [c.case_id for c in generate(spec)] == [0, 1, 2, 3]

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GenSpec(seed=0, partial_ratio=0.0)
        with pytest.raises(ValueError):
            GenSpec(seed=0, noise_sigma=-0.1)
        with pytest.raises(ValueError):
            GenSpec(seed=0, mode="pyramid")


class TestWriteBundle:
    def test_bundle_layout(self, tmp_path):
        spec = GenSpec(seed=10, count=3, mode="bend")
        manifest_path = write_bundle(spec, tmp_path / "bundle")
        manifest = json.loads(manifest_path.read_text())
        assert len(manifest["cases"]) == 3
        for entry in manifest["cases"]:
            assert (tmp_path / "bundle" / entry["cloud"]).exists()
            assert (tmp_path / "bundle" / entry["truth"]).exists()

    def test_bundle_byte_determinism(self, tmp_path):
        spec = GenSpec(seed=11, count=2, noise_sigma=0.02)
        p1 = write_bundle(spec, tmp_path / "a")
        p2 = write_bundle(spec, tmp_path / "b")
        for entry in json.loads(p1.read_text())["cases"]:
            a = (tmp_path / "a" / entry["cloud"]).read_bytes()
            b = (tmp_path / "b" / entry["cloud"]).read_bytes()
            assert a == b
