"""Self-verification checks wiring the analytic code to its Monte Carlo oracles.

Each check returns a pass/fail plus a one-line numeric detail; the CLI's
``verify`` subcommand prints them and exits nonzero if any fail.  Scales
(width, network count, ensemble draws) come from the experiment config so the
same suite runs at desk scale in tests and at full scale from the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import predictive, spectral_decompose
from .info_metrics import MetricConfig, TrajectoryFunctionals, izx_bounds
from .kernels import ArchitectureSpec, compute_kernels
from .mc_oracle import empirical_kernel_suite, ensemble_trajectories


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "all_passed": bool(self.all_passed),
            "checks": [
                {"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                for c in self.checks
            ],
        }


def _rel_frobenius(estimate: np.ndarray, truth: np.ndarray) -> float:
    return float(np.linalg.norm(estimate - truth) / np.linalg.norm(truth))


def check_kernel_oracle(cfg) -> CheckResult:
    """Analytic NNGP/NTK vs finite-width sampling, depths 1-3, both activations."""
    v = cfg.verify
    rng = np.random.default_rng(cfg.seed)
    inputs = rng.standard_normal((v.n_points, cfg.task.n_x))
    archs = []
    for activation in ("relu", "erf"):
        sw2 = rng.uniform(0.8, 2.5)
        sb2 = rng.uniform(0.01, 0.2)
        for depth in (1, 2, 3):
            archs.append(ArchitectureSpec(depth, activation, sw2, sb2, cfg.task.n_x))
    estimates = empirical_kernel_suite(
        archs,
        inputs,
        width=v.width,
        n_networks=v.n_networks,
        nngp_heads=v.nngp_heads,
        ntk_heads=v.ntk_heads,
        seed=cfg.seed,
    )
    worst = 0.0
    worst_name = ""
    for arch, (nngp_emp, ntk_emp) in zip(archs, estimates):
        kp = compute_kernels(arch, inputs)
        for label, emp, ana in (
            ("nngp", nngp_emp, kp.nngp_train),
            ("ntk", ntk_emp, kp.ntk_train),
        ):
            err = _rel_frobenius(emp, ana)
            # the Fisher trace equals Tr NTK, so trace agreement is checked
            # alongside the full matrices
            err = max(err, abs(np.trace(emp) - np.trace(ana)) / np.trace(ana))
            if err > worst:
                worst, worst_name = err, f"{arch.activation} depth={arch.depth} {label}"
    return CheckResult(
        "kernel_oracle",
        worst <= v.kernel_rtol,
        f"worst relative error {worst:.4f} ({worst_name}), tolerance {v.kernel_rtol}",
    )


def _small_instance(cfg, n_train=20, n_test=5):
    rng = np.random.default_rng(cfg.seed + 1)
    x_train = rng.standard_normal((n_train, cfg.task.n_x))
    x_test = rng.standard_normal((n_test, cfg.task.n_x))
    targets = rng.standard_normal(n_train)
    arch = ArchitectureSpec(3, "erf", 1.5, 0.01, cfg.task.n_x)
    kp = compute_kernels(arch, x_train, x_test)
    return kp, spectral_decompose(kp.ntk_train), targets


def check_tau0_limits(cfg) -> CheckResult:
    kp, spec, targets = _small_instance(cfg)
    pred = predictive(spec, kp, targets, 0.0)
    scale = np.abs(kp.nngp_test).max()
    mean_err = np.abs(pred.mean).max()
    cov_err = np.abs(pred.covariance - kp.nngp_test).max() / scale
    ok = mean_err == 0.0 and cov_err <= 1e-12
    return CheckResult(
        "tau0_limits", ok, f"max |mean| {mean_err:.2e}, relative cov deviation {cov_err:.2e}"
    )


def check_tau_inf_interpolation(cfg) -> CheckResult:
    kp, spec, targets = _small_instance(cfg)
    pred = predictive(spec, kp.train_as_query(), targets, np.inf)
    mean_err = np.abs(pred.mean - targets).max()
    cov_err = np.abs(pred.covariance).max()
    ok = mean_err <= 1e-6 and cov_err <= 1e-6
    return CheckResult(
        "tau_inf_interpolation", ok, f"max |mean - y| {mean_err:.2e}, max |cov| {cov_err:.2e}"
    )


def check_ensemble_oracle(cfg) -> CheckResult:
    """Closed-form predictive moments vs affine-ensemble sampling, 3 SE."""
    kp, spec, targets = _small_instance(cfg)
    n_train = kp.n_train
    worst = 0.0
    for tau in (0.1, 1.0, 10.0, np.inf):
        pred = predictive(spec, kp, targets, tau)
        moments = ensemble_trajectories(
            spec, kp, targets, tau, cfg.verify.ensemble_draws, seed=cfg.seed + 2
        )
        mean_z = np.abs(pred.mean - moments.mean[n_train:]) / (moments.mean_se[n_train:] + 1e-12)
        cov_emp = moments.cov[n_train:, n_train:]
        cov_se = moments.cov_se()[n_train:, n_train:]
        cov_z = np.abs(pred.covariance - cov_emp) / (cov_se + 1e-12)
        worst = max(worst, float(mean_z.max()), float(cov_z.max()))
    return CheckResult(
        "ensemble_oracle", worst <= 3.0, f"worst |z-score| {worst:.2f} over tau grid, limit 3"
    )


def check_derivative_fd(cfg) -> CheckResult:
    """d/dtau of the parameter-information bound vs central finite differences."""
    kp, spec, targets = _small_instance(cfg)
    funcs = TrajectoryFunctionals(spec, kp, targets)
    rng = np.random.default_rng(cfg.seed + 3)
    taus = 10.0 ** rng.uniform(-2, 3, 20)
    worst = 0.0
    for tau in taus:
        step = 1e-5 * tau
        fd = (funcs.itheta_d_lower(tau + step) - funcs.itheta_d_lower(tau - step)) / (2 * step)
        analytic = funcs.ditheta_d_dtau(tau)
        worst = max(worst, abs(fd - analytic) / abs(analytic))
    return CheckResult(
        "derivative_fd", worst <= 1e-4, f"worst relative error {worst:.2e}, tolerance 1e-4"
    )


def check_izx_sandwich(cfg) -> CheckResult:
    rng = np.random.default_rng(cfg.seed + 4)
    n = min(cfg.metrics.batch_size, 256)
    metric_cfg = MetricConfig(
        batch_size=n, mc_samples=4, observation_variance=1.0, rng_seed=cfg.metrics.rng_seed
    )
    worst_gap = np.inf
    cap_ok = True
    for k in range(20):
        means = rng.standard_normal(n) * 10.0 ** rng.uniform(-1, 1)
        variances = 10.0 ** rng.uniform(-2, 1, n)
        bounds = izx_bounds(means, variances, metric_cfg, seed=[cfg.seed, 5, k])
        worst_gap = min(worst_gap, bounds.upper - bounds.lower)
        cap_ok = cap_ok and bounds.lower <= np.log(n) + 1e-12
    ok = worst_gap >= -1e-9 and cap_ok
    return CheckResult(
        "izx_sandwich", ok, f"min (upper - lower) {worst_gap:.3e}, log-batch cap held: {cap_ok}"
    )


def check_path_length_monotone(cfg) -> CheckResult:
    kp, spec, targets = _small_instance(cfg, n_train=10, n_test=2)
    funcs = TrajectoryFunctionals(spec, kp, targets)
    grid = np.geomspace(1e-3, 1e6, 60)
    values = np.array([funcs.path_length_bound(t) for t in grid])
    limit = funcs.path_length_bound(np.inf)
    monotone = bool(np.all(np.diff(values) >= -1e-12))
    ok = monotone and np.isfinite(limit) and values[-1] <= limit + 1e-9
    return CheckResult(
        "path_length_monotone",
        ok,
        f"monotone: {monotone}, value at tau=inf {limit:.4f}",
    )


ALL_CHECKS = (
    check_kernel_oracle,
    check_tau0_limits,
    check_tau_inf_interpolation,
    check_ensemble_oracle,
    check_derivative_fd,
    check_izx_sandwich,
    check_path_length_monotone,
)


def run_all(cfg) -> VerifyReport:
    return VerifyReport(checks=tuple(check(cfg) for check in ALL_CHECKS))
