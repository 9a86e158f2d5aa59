import numpy as np
import pytest

from secu.numerics import make_rng, normalize_rows
from secu.probes import (
    SphereClusterModel,
    coverage_probe,
    drift_probe,
    predicted_variance_ratio,
    variance_ratio_probe,
)


class TestCoverage:
    def test_batch_of_one_covers_exactly_one(self):
        covered = coverage_probe(100, 1, 50, make_rng(90))
        assert np.all(covered == 1)

    def test_coverage_never_exceeds_batch_size(self):
        covered = coverage_probe(40, 12, 500, make_rng(91))
        assert covered.max() <= 12
        assert covered.min() >= 1

    def test_mean_coverage_matches_collision_formula(self):
        """E[#distinct] = K(1 - (1 - 1/K)^b); Monte Carlo within 3 sigma."""
        k, b, trials = 200, 80, 2000
        covered = coverage_probe(k, b, trials, make_rng(92))
        expected = k * (1.0 - (1.0 - 1.0 / k) ** b)
        assert covered.mean() == pytest.approx(expected, abs=3 * covered.std() / np.sqrt(trials))

    def test_equal_batch_and_clusters_collide(self):
        covered = coverage_probe(64, 64, 300, make_rng(93))
        assert covered.max() <= 64
        assert covered.mean() < 64  # collisions are essentially certain

    def test_bad_sizes_rejected(self):
        with pytest.raises(ValueError):
            coverage_probe(10, 11, 5, make_rng(94))
        with pytest.raises(ValueError):
            coverage_probe(10, 0, 5, make_rng(95))


class TestVarianceRatio:
    def test_two_cluster_prediction_is_one(self):
        assert predicted_variance_ratio(2, 0.9) == pytest.approx(1.0, abs=1e-12)

    def test_vanishing_mean_norm_limit(self):
        assert predicted_variance_ratio(50, 1e-9) == pytest.approx(1.0, abs=1e-6)
        model = SphereClusterModel.sample_model(8, 16, 1e-6, make_rng(96))
        report = variance_ratio_probe(model, 20000, make_rng(97))
        assert report.var_pos == pytest.approx(1.0, abs=1e-3)
        assert report.var_neg == pytest.approx(1.0, abs=1e-2)

    def test_samples_unit_norm_and_mean_norm_achieved(self):
        model = SphereClusterModel.sample_model(5, 12, 0.8, make_rng(98))
        x = model.sample(np.repeat(np.arange(5), 2000), make_rng(99))
        np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-9)
        report = variance_ratio_probe(model, 50000, make_rng(100))
        assert report.achieved_mean_norm == pytest.approx(0.8, abs=0.02)

    def test_empirical_ratio_tracks_prediction(self):
        model = SphereClusterModel.sample_model(50, 32, 0.9, make_rng(101))
        report = variance_ratio_probe(model, 100000, make_rng(102))
        assert abs(report.empirical_ratio / report.predicted_ratio - 1.0) <= 0.10
        # positive variance is exactly 1 - a^2 by construction
        assert report.var_pos == pytest.approx(1.0 - 0.81, abs=1e-9)

    def test_deterministic_under_seed(self):
        model = SphereClusterModel.sample_model(6, 8, 0.7, make_rng(103))
        a = variance_ratio_probe(model, 5000, make_rng(104))
        b = variance_ratio_probe(model, 5000, make_rng(104))
        assert a.empirical_ratio == b.empirical_ratio

    def test_bad_model_params_rejected(self):
        with pytest.raises(ValueError):
            SphereClusterModel.sample_model(3, 8, 1.0, make_rng(105))
        with pytest.raises(ValueError):
            SphereClusterModel.sample_model(1, 8, 0.5, make_rng(106))


class TestDrift:
    def test_separable_sharp_limit_identical_trajectories(self):
        """Centers on tight blobs at a sharp temperature: negatives sit at
        p ~ 0, the push term vanishes, and both updates coincide."""
        rng = make_rng(107)
        base = np.eye(4)
        x = normalize_rows(np.repeat(base, 25, axis=0) + 0.02 * rng.normal(size=(100, 4)))
        labels = np.repeat(np.arange(4), 25)
        report = drift_probe(x, labels, steps=20, lam=0.01, seed=3, w0=base)
        np.testing.assert_allclose(report.displacement_ce, report.displacement_secu, atol=1e-9)
        assert report.final_sizes_ce == report.final_sizes_secu

    def test_single_cluster_identical(self):
        rng = make_rng(108)
        x = normalize_rows(rng.normal(size=(30, 5)))
        labels = np.zeros(30, dtype=int)
        report = drift_probe(x, labels, steps=10, seed=4)
        np.testing.assert_allclose(report.displacement_ce, report.displacement_secu, atol=1e-12)

    def test_deterministic_and_shapes(self):
        rng = make_rng(109)
        model = SphereClusterModel.sample_model(6, 10, 0.85, rng)
        labels = make_rng(110).integers(0, 6, size=200)
        x = model.sample(labels, make_rng(111))
        a = drift_probe(x, labels, steps=15, seed=5)
        b = drift_probe(x, labels, steps=15, seed=5)
        assert np.array_equal(a.displacement_ce, b.displacement_ce)
        assert np.array_equal(a.displacement_secu, b.displacement_secu)
        assert a.displacement_ce.shape == (15,)
