import numpy as np
import pytest

from ntkinfo import (
    ArchitectureSpec,
    PredictiveEvaluator,
    compute_kernels,
    phi_profile,
    phi_tau,
    predictive,
    spectral_decompose,
)
from ntkinfo.dynamics import DynamicsError
from ntkinfo.mc_oracle import ensemble_trajectories


class TestSpectralDecompose:
    def test_identity(self):
        spec = spectral_decompose(np.eye(3))
        np.testing.assert_allclose(spec.eigenvalues, np.ones(3))
        np.testing.assert_allclose(spec.eigenvectors @ spec.eigenvectors.T, np.eye(3), atol=1e-12)

    def test_diagonal_sorted_nonincreasing(self):
        spec = spectral_decompose(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(spec.eigenvalues, [4.0, 1.0])
        np.testing.assert_allclose(np.abs(spec.eigenvectors), np.eye(2), atol=1e-12)

    def test_wishart_reconstruction(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal((50, 50))
        mat = f @ f.T
        spec = spectral_decompose(mat)
        recon = spec.matrix_function(spec.eigenvalues)
        assert np.linalg.norm(recon - mat) <= 1e-8 * np.linalg.norm(mat)

    def test_small_eigenvalues_clamped_to_zero(self):
        mat = np.diag([1.0, 1e-14, -1e-14])
        spec = spectral_decompose(mat)
        assert spec.eigenvalues[0] == pytest.approx(1.0)
        assert spec.eigenvalues[1] == 0.0 and spec.eigenvalues[2] == 0.0

    def test_rejects_asymmetric_and_nonfinite(self):
        with pytest.raises(DynamicsError, match="symmetric"):
            spectral_decompose(np.array([[1.0, 0.5], [0.2, 1.0]]))
        with pytest.raises(DynamicsError, match="finite"):
            spectral_decompose(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestPhiTau:
    def test_tau_zero_is_zero_matrix(self):
        spec = spectral_decompose(np.diag([3.0, 1.0]))
        np.testing.assert_array_equal(phi_tau(spec, 0.0), np.zeros((2, 2)))

    def test_tau_inf_is_pseudo_inverse(self):
        spec = spectral_decompose(np.diag([2.0, 5.0]))
        np.testing.assert_allclose(phi_tau(spec, np.inf), np.diag([0.5, 0.2]), atol=1e-14)
        # null directions stay at zero rather than blowing up
        spec0 = spectral_decompose(np.diag([2.0, 0.0]))
        np.testing.assert_allclose(phi_tau(spec0, np.inf), np.diag([0.5, 0.0]), atol=1e-14)

    def test_matches_quadrature_of_decay_integral(self):
        # h(lam, tau) = integral_0^tau e^{-s lam} ds; value frozen from a
        # 1e-8-step trapezoid of the integrand at lam=3, tau=0.1
        quad_value = 0.0863939264394275
        h = phi_profile(np.array([3.0]), 0.1)[0]
        assert h == pytest.approx(quad_value, abs=1e-12)

    def test_series_and_direct_branches_agree_at_cutoff(self):
        tau = 1.0
        for lam in (0.99e-4, 1.01e-4):
            exact = (1.0 - np.exp(-tau * lam)) / lam
            assert phi_profile(np.array([lam]), tau)[0] == pytest.approx(exact, rel=1e-12)

    def test_monotone_in_tau(self):
        lam = np.array([0.0, 1e-6, 0.5, 10.0])
        taus = np.geomspace(1e-3, 1e4, 25)
        values = np.array([phi_profile(lam, t) for t in taus])
        assert np.all(np.diff(values, axis=0) >= -1e-15)

    def test_reconstructs_one_minus_decay_on_range(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((8, 8))
        spec = spectral_decompose(f @ f.T)
        tau = 0.7
        lhs = phi_tau(spec, tau) @ spec.matrix_function(spec.eigenvalues)
        rhs = spec.matrix_function(1.0 - np.exp(-tau * spec.eigenvalues))
        assert np.abs(lhs - rhs).max() <= 1e-8

    def test_negative_tau_rejected(self):
        spec = spectral_decompose(np.eye(2))
        with pytest.raises(DynamicsError):
            phi_tau(spec, -1.0)
        with pytest.raises(DynamicsError):
            phi_profile(np.array([1.0]), np.nan)


class TestPredictive:
    def test_tau_zero_limits_exact(self, small_instance):
        kp, spec, targets = small_instance
        pred = predictive(spec, kp, targets, 0.0)
        assert np.all(pred.mean == 0.0)
        assert np.abs(pred.covariance - kp.nngp_test).max() <= 1e-14 * np.abs(kp.nngp_test).max()

    def test_tau_inf_interpolates_train_targets(self, small_instance):
        kp, spec, targets = small_instance
        pred = predictive(spec, kp.train_as_query(), targets, np.inf)
        assert np.abs(pred.mean - targets).max() <= 1e-6
        assert np.abs(pred.covariance).max() <= 1e-6

    def test_train_residual_monotone_in_tau(self, small_instance):
        kp, spec, targets = small_instance
        ev = PredictiveEvaluator(spec, kp.train_as_query(), targets)
        norms = []
        for tau in np.geomspace(1e-3, 1e5, 40):
            mean, _ = ev.mean_and_diag(tau)
            norms.append(np.linalg.norm(mean - targets))
        assert np.all(np.diff(norms) <= 1e-10)

    def test_diag_mode_matches_full_covariance(self, small_instance):
        kp, spec, targets = small_instance
        for tau in (0.2, 3.0, np.inf):
            full = predictive(spec, kp, targets, tau)
            diag = predictive(spec, kp, targets, tau, diag_only=True)
            assert diag.covariance is None
            np.testing.assert_allclose(diag.variance_diag, np.diag(full.covariance), atol=1e-10)
            np.testing.assert_array_equal(diag.mean, full.mean)

    def test_covariance_symmetric_psd(self, small_instance):
        kp, spec, targets = small_instance
        for tau in (0.1, 1.0, 50.0):
            pred = predictive(spec, kp, targets, tau)
            np.testing.assert_array_equal(pred.covariance, pred.covariance.T)
            eig = np.linalg.eigvalsh(pred.covariance)
            assert eig.min() >= -1e-10 * max(eig.max(), 1e-30)

    def test_matches_sampled_ensemble_moments(self, small_instance):
        """Closed-form mean/covariance vs 30k affine-map samples at tau=1;
        the full four-tau check at 1e5 draws runs in the acceptance suite."""
        kp, spec, targets = small_instance
        pred = predictive(spec, kp, targets, 1.0)
        moments = ensemble_trajectories(spec, kp, targets, 1.0, 30_000, seed=2)
        n = kp.n_train
        mean_z = np.abs(pred.mean - moments.mean[n:]) / moments.mean_se[n:]
        cov_z = np.abs(pred.covariance - moments.cov[n:, n:]) / moments.cov_se()[n:, n:]
        assert mean_z.max() <= 3.0
        assert cov_z.max() <= 3.0

    def test_dimension_mismatch_rejected(self, small_instance):
        kp, spec, _ = small_instance
        with pytest.raises(DynamicsError, match="targets"):
            predictive(spec, kp, np.zeros(7), 1.0)
