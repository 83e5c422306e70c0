import numpy as np
import pytest

from ntkinfo import (
    ArchitectureSpec,
    FiniteWidthConfig,
    compute_kernels,
    empirical_kernel_suite,
    empirical_kernels,
    empirical_nngp,
    empirical_ntk,
    ensemble_trajectories,
    predictive,
    spectral_decompose,
)
from ntkinfo.kernels import KernelPair
from ntkinfo.mc_oracle import OracleError


def small_cfg(arch, **overrides):
    params = dict(width=256, n_networks=20, nngp_heads=32, ntk_heads=8, seed=7)
    params.update(overrides)
    return FiniteWidthConfig(arch=arch, **params)


class TestConfig:
    def test_width_floor(self):
        arch = ArchitectureSpec(1, "relu", 1.0, 0.1, 4)
        with pytest.raises(OracleError):
            FiniteWidthConfig(arch=arch, width=32)
        with pytest.raises(OracleError):
            FiniteWidthConfig(arch=arch, nngp_heads=4, ntk_heads=8)


class TestFiniteWidthKernels:
    def test_seeded_determinism_bitwise(self):
        arch = ArchitectureSpec(2, "erf", 1.2, 0.05, 6)
        rng = np.random.default_rng(0)
        x = rng.standard_normal((5, 6))
        cfg = small_cfg(arch)
        a = empirical_kernels(cfg, x)
        b = empirical_kernels(cfg, x)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        c = empirical_kernels(small_cfg(arch, seed=8), x)
        assert not np.array_equal(a[0], c[0])

    def test_duplicated_rows_duplicate_gram_rows(self):
        arch = ArchitectureSpec(2, "relu", 1.5, 0.1, 6)
        rng = np.random.default_rng(1)
        base = rng.standard_normal(6)
        x = np.vstack([base, rng.standard_normal(6), base])
        nngp, ntk = empirical_kernels(small_cfg(arch), x)
        for mat in (nngp, ntk):
            np.testing.assert_array_equal(mat[0], mat[2])
            np.testing.assert_array_equal(mat[:, 0], mat[:, 2])
            np.testing.assert_array_equal(mat, mat.T)

    def test_single_op_wrappers_consistent(self):
        arch = ArchitectureSpec(1, "erf", 1.0, 0.02, 6)
        x = np.random.default_rng(2).standard_normal((4, 6))
        cfg = small_cfg(arch)
        nngp, ntk = empirical_kernels(cfg, x)
        np.testing.assert_array_equal(empirical_nngp(cfg, x), nngp)
        np.testing.assert_array_equal(empirical_ntk(cfg, x), ntk)

    def test_width_doubling_shrinks_error(self):
        """Trunk fluctuations scale like 1/sqrt(width): with readout heads at
        the width so head noise shrinks alongside, the median relative error
        over 10 seeds must drop when the width doubles."""
        arch = ArchitectureSpec(2, "erf", 1.5, 0.05, 6)
        x = np.random.default_rng(3).standard_normal((5, 6))
        kp = compute_kernels(arch, x)
        truth = kp.nngp_train
        errors = {}
        for width in (128, 256):
            errs = []
            for seed in range(10):
                cfg = FiniteWidthConfig(
                    arch=arch, width=width, n_networks=8, nngp_heads=width, ntk_heads=8, seed=seed
                )
                est = empirical_nngp(cfg, x)
                errs.append(np.linalg.norm(est - truth) / np.linalg.norm(truth))
            errors[width] = np.median(errs)
        assert errors[256] < errors[128]

    def test_ntk_width_doubling_shrinks_error(self):
        arch = ArchitectureSpec(2, "relu", 1.5, 0.05, 6)
        x = np.random.default_rng(4).standard_normal((5, 6))
        truth = compute_kernels(arch, x).ntk_train
        errors = {}
        for width in (128, 256):
            errs = []
            for seed in range(10):
                cfg = FiniteWidthConfig(
                    arch=arch, width=width, n_networks=8, nngp_heads=32, ntk_heads=32, seed=seed
                )
                est = empirical_ntk(cfg, x)
                errs.append(np.linalg.norm(est - truth) / np.linalg.norm(truth))
            errors[width] = np.median(errs)
        assert errors[256] < errors[128]

    def test_suite_shares_draws_across_architectures(self):
        """A multi-architecture suite stays unbiased: every member's estimate
        lands near its own analytic kernel."""
        rng = np.random.default_rng(5)
        x = rng.standard_normal((5, 6))
        archs = [
            ArchitectureSpec(1, "relu", 2.0, 0.1, 6),
            ArchitectureSpec(3, "erf", 1.2, 0.02, 6),
            ArchitectureSpec(2, "erf", 0.9, 0.2, 6),
        ]
        results = empirical_kernel_suite(
            archs, x, width=512, n_networks=30, nngp_heads=64, ntk_heads=8, seed=11
        )
        for arch, (nngp, ntk) in zip(archs, results):
            kp = compute_kernels(arch, x)
            assert np.linalg.norm(nngp - kp.nngp_train) / np.linalg.norm(kp.nngp_train) < 0.15
            assert np.linalg.norm(ntk - kp.ntk_train) / np.linalg.norm(kp.ntk_train) < 0.15

    def test_input_dim_mismatch_rejected(self):
        archs = [
            ArchitectureSpec(1, "relu", 1.0, 0.1, 6),
            ArchitectureSpec(1, "relu", 1.0, 0.1, 7),
        ]
        with pytest.raises(OracleError):
            empirical_kernel_suite(archs, np.zeros((3, 6)), width=64, n_networks=1)


class TestEnsembleTrajectories:
    def test_tau_zero_moments_match_prior(self, small_instance):
        kp, spec, targets = small_instance
        moments = ensemble_trajectories(spec, kp, targets, 0.0, 50_000, seed=3)
        joint = kp.joint_nngp()
        assert np.abs(moments.mean).max() <= 3.0 * moments.mean_se.max()
        z = np.abs(moments.cov - joint) / moments.cov_se()
        assert z.max() <= 3.5

    def test_tau_inf_train_draws_hit_targets(self, small_instance):
        kp, spec, targets = small_instance
        n = kp.n_train
        moments = ensemble_trajectories(spec, kp, targets, np.inf, 2_000, seed=4)
        assert np.abs(moments.mean[:n] - targets).max() <= 1e-10
        assert np.abs(moments.cov[:n, :n]).max() <= 1e-10

    def test_matches_predictive_at_intermediate_tau(self, small_instance):
        kp, spec, targets = small_instance
        pred = predictive(spec, kp, targets, 2.0)
        moments = ensemble_trajectories(spec, kp, targets, 2.0, 60_000, seed=5)
        n = kp.n_train
        mean_z = np.abs(pred.mean - moments.mean[n:]) / moments.mean_se[n:]
        cov_z = np.abs(pred.covariance - moments.cov[n:, n:]) / moments.cov_se()[n:, n:]
        assert mean_z.max() <= 3.0 and cov_z.max() <= 3.0

    def test_non_psd_joint_rejected(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        kp = KernelPair(
            nngp_train=bad,
            ntk_train=np.eye(2),
            nngp_cross=np.zeros((2, 0)),
            ntk_cross=np.zeros((0, 2)),
            nngp_test=np.zeros((0, 0)),
            nngp_test_diag=np.zeros(0),
        )
        spec = spectral_decompose(np.eye(2))
        with pytest.raises(OracleError, match="positive semidefinite"):
            ensemble_trajectories(spec, kp, np.zeros(2), 1.0, 100, seed=0)
