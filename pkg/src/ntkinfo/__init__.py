"""Analytic training dynamics and information metrics for infinite ensembles
of infinitely wide neural networks, with Monte Carlo verification oracles."""

__version__ = "0.1.0"

from .kernels import ArchitectureSpec, KernelPair, compute_kernels, kernel_matrices
from .dynamics import (
    PredictiveDistribution,
    PredictiveEvaluator,
    SpectralOperator,
    phi_profile,
    phi_tau,
    predictive,
    spectral_decompose,
)
from .gaussian_task import GaussianTask, TaskSample, entropy_y, exact_mi, gib_frontier, sample
from .info_metrics import (
    IzxBounds,
    MetricConfig,
    TrajectoryFunctionals,
    TrajectoryRecord,
    TRAJECTORY_COLUMNS,
    ditheta_d_dtau,
    expected_loss,
    fisher_trace,
    itheta_d_lower,
    izd_upper,
    izx_bounds,
    izy_lower,
    log_density_constant,
    path_length_bound,
)
from .mc_oracle import (
    EnsembleMoments,
    FiniteWidthConfig,
    empirical_kernel_suite,
    empirical_kernels,
    empirical_nngp,
    empirical_ntk,
    ensemble_trajectories,
)

__all__ = [
    "ArchitectureSpec",
    "KernelPair",
    "compute_kernels",
    "kernel_matrices",
    "SpectralOperator",
    "PredictiveDistribution",
    "PredictiveEvaluator",
    "spectral_decompose",
    "phi_profile",
    "phi_tau",
    "predictive",
    "GaussianTask",
    "TaskSample",
    "sample",
    "exact_mi",
    "entropy_y",
    "gib_frontier",
    "MetricConfig",
    "TrajectoryRecord",
    "TrajectoryFunctionals",
    "TRAJECTORY_COLUMNS",
    "IzxBounds",
    "expected_loss",
    "izy_lower",
    "izx_bounds",
    "izd_upper",
    "fisher_trace",
    "path_length_bound",
    "itheta_d_lower",
    "ditheta_d_dtau",
    "log_density_constant",
    "FiniteWidthConfig",
    "EnsembleMoments",
    "empirical_nngp",
    "empirical_ntk",
    "empirical_kernels",
    "empirical_kernel_suite",
    "ensemble_trajectories",
]
