"""Information-theoretic quantities of the trained ensemble.

All quantities are in nats and are derived from the Gaussian predictive
distribution p(z|x, D) = N(mean(x, tau), var(x, tau)) and the train-set NTK
spectrum.  The observation model is q(y|z) = N(z, sigma_obs^2).

expected_loss      1/2 ||y - mean||^2 + 1/2 Tr cov   (nonnegative core; the
                   -(k/2) log(2 pi sigma_obs^2) density constant is kept
                   separate via ``log_density_constant``)
izy_lower          H(Y) - mean core - 1/2 log(2 pi sigma_obs^2)
izx_bounds         leave-one-in / leave-one-out minibatch sandwich on
                   I(Z; X | D) from per-example Gaussian densities; the lower
                   bound can never exceed log(batch size)
izd_upper          mean KL( N(mean, var) || N(0, K(x,x)) ), an upper bound on
                   I(Z; D | X) against the prior ensemble
fisher_trace       Tr NTK; constant in training time
path_length_bound  sqrt( 1/2 [ Tr(K Theta (1 - e^{-2 tau Theta}))
                               + Y^T Theta (1 - e^{-2 tau Theta}) Y ] ),
                   bounding the expected Fisher path length of the parameters
itheta_d_lower     Tr(K Theta^{-1} (1 - e^{-tau Theta})^2)
                   + Y^T Theta^{-1} (1 - e^{-tau Theta})^2 Y + tau Tr Theta,
                   the flow-based bound on I(parameters; D); null eigenvalues
                   contribute 0 to the matrix terms (tau^2 lam -> 0 limit)
ditheta_d_dtau     its exact tau-derivative,
                   2 Tr(K (1-e^{-tau Theta}) e^{-tau Theta})
                   + 2 Y^T (1-e^{-tau Theta}) e^{-tau Theta} Y + Tr Theta
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import PredictiveDistribution, SpectralOperator, _check_tau
from .kernels import KernelPair

# variance floor for collapsed per-example densities (late-time train points)
VARIANCE_FLOOR = 1e-12


class MetricError(ValueError):
    """Raised for invalid metric inputs."""


@dataclass(frozen=True)
class MetricConfig:
    """Estimator knobs shared across the trajectory metrics."""

    batch_size: int = 1000
    mc_samples: int = 64
    observation_variance: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise MetricError("batch_size must be >= 2 (leave-one-out needs j != i)")
        if self.mc_samples < 1:
            raise MetricError("mc_samples must be >= 1")
        if self.observation_variance <= 0:
            raise MetricError("observation_variance must be positive")


# CSV row contract; order is fixed.
TRAJECTORY_COLUMNS = (
    "tau",
    "train_loss",
    "test_loss",
    "izy_lower",
    "izx_lower",
    "izx_upper",
    "izd_upper",
    "fisher_trace",
    "path_length_bound",
    "itheta_d",
    "ditheta_d_dtau",
    "degeneracy_flags",
)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One row of the per-tau metric table."""

    tau: float
    train_loss: float
    test_loss: float
    izy_lower: float
    izx_lower: float
    izx_upper: float
    izd_upper: float
    fisher_trace: float
    path_length_bound: float
    itheta_d_lower: float
    ditheta_d_dtau: float
    degeneracy_flags: int = 0

    def as_row(self) -> tuple:
        return (
            self.tau,
            self.train_loss,
            self.test_loss,
            self.izy_lower,
            self.izx_lower,
            self.izx_upper,
            self.izd_upper,
            self.fisher_trace,
            self.path_length_bound,
            self.itheta_d_lower,
            self.ditheta_d_dtau,
            self.degeneracy_flags,
        )


class IzxBounds(NamedTuple):
    lower: float
    upper: float
    degenerate_count: int
    lower_se: float
    upper_se: float


def log_density_constant(k: int, observation_variance: float = 1.0) -> float:
    """The (k/2) log(2 pi sigma_obs^2) constant of the Gaussian log density."""
    return 0.5 * k * math.log(2.0 * math.pi * observation_variance)


def expected_loss(
    pred: PredictiveDistribution,
    targets: np.ndarray,
    observation_variance: float = 1.0,
) -> float:
    """Nonnegative core of -E[log q(y|z)]: quadratic residual plus variance trace."""
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if targets.shape != pred.mean.shape:
        raise MetricError(
            f"targets shape {targets.shape} does not match prediction {pred.mean.shape}"
        )
    resid = targets - pred.mean
    trace = pred.variance_diag.sum()
    return float(0.5 * (resid @ resid + trace) / observation_variance)


def izy_lower(
    pred: PredictiveDistribution,
    targets: np.ndarray,
    hy: float,
    observation_variance: float = 1.0,
) -> float:
    """Variational lower bound H(Y) + E[log q(y|z)], averaged over the batch."""
    n = pred.mean.shape[0]
    core = expected_loss(pred, targets, observation_variance) / n
    return float(hy - core - log_density_constant(1, observation_variance))


def izx_bounds(
    means: np.ndarray,
    variances: np.ndarray,
    cfg: MetricConfig,
    seed: int | None = None,
) -> IzxBounds:
    """Minibatch sandwich on I(Z; X | D) from per-example scalar Gaussians.

    Draws cfg.mc_samples representations per example and scores them against
    every example's conditional density via log-sum-exp.  Nonpositive
    variances are floored at VARIANCE_FLOOR and counted as degenerate.
    Standard errors are over per-example contributions.
    """
    means = np.asarray(means, dtype=np.float64).reshape(-1)
    variances = np.asarray(variances, dtype=np.float64).reshape(-1)
    n = means.shape[0]
    if variances.shape[0] != n:
        raise MetricError("means and variances must have equal length")
    if n != cfg.batch_size:
        raise MetricError(f"expected batch_size={cfg.batch_size} examples, got {n}")
    degenerate = int(np.count_nonzero(variances < VARIANCE_FLOOR))
    var = np.clip(variances, VARIANCE_FLOOR, None)
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
    std = np.sqrt(var)
    log_norm = 0.5 * (np.log(var) + math.log(2.0 * math.pi))
    log_n, log_n1 = math.log(n), math.log(n - 1)
    lower_i = np.zeros(n)
    upper_i = np.zeros(n)
    for _ in range(cfg.mc_samples):
        z = means + std * rng.standard_normal(n)
        # scores[i, j] = log p(z_i | x_j)
        scores = -0.5 * (z[:, None] - means[None, :]) ** 2 / var[None, :] - log_norm[None, :]
        own = np.diag(scores).copy()
        top = scores.max(axis=1, keepdims=True)
        lse_all = top[:, 0] + np.log(np.exp(scores - top).sum(axis=1))
        np.fill_diagonal(scores, -np.inf)
        top = scores.max(axis=1, keepdims=True)
        lse_loo = top[:, 0] + np.log(np.exp(scores - top).sum(axis=1))
        lower_i += own - (lse_all - log_n)
        upper_i += own - (lse_loo - log_n1)
    lower_i /= cfg.mc_samples
    upper_i /= cfg.mc_samples
    return IzxBounds(
        lower=float(lower_i.mean()),
        upper=float(upper_i.mean()),
        degenerate_count=degenerate,
        lower_se=float(lower_i.std(ddof=1) / math.sqrt(n)),
        upper_se=float(upper_i.std(ddof=1) / math.sqrt(n)),
    )


def izd_upper(pred: PredictiveDistribution, prior_diag: np.ndarray) -> float:
    """Mean KL between the trained per-point Gaussians and the prior ensemble."""
    prior = np.asarray(prior_diag, dtype=np.float64).reshape(-1)
    if np.any(prior <= 0):
        raise MetricError("prior variances must be positive")
    if prior.shape != pred.variance_diag.shape:
        raise MetricError("prior diagonal does not match the prediction")
    ratio = pred.variance_diag / prior
    kl = 0.5 * (ratio + pred.mean**2 / prior - 1.0 - np.log(np.clip(ratio, 1e-300, None)))
    return float(kl.mean())


def fisher_trace(kp: KernelPair) -> float:
    """Tr of the train-set NTK; equals the Fisher trace at every tau."""
    return float(np.trace(kp.ntk_train))


def _decay(eigenvalues: np.ndarray, tau: float, rate: float = 1.0) -> np.ndarray:
    """exp(-rate * tau * lam) with the tau = inf limit on the positive spectrum."""
    if np.isinf(tau):
        return np.where(eigenvalues > 0, 0.0, 1.0)
    return np.exp(-rate * tau * eigenvalues)


class TrajectoryFunctionals:
    """Parameter-space functionals of one (kernels, targets) instance.

    Projects the NNGP diagonal and targets into the NTK eigenbasis once, so
    evaluating the functionals over a whole tau grid is O(N) per tau.
    Immutable after construction.
    """

    def __init__(self, spec: SpectralOperator, kp: KernelPair, targets: np.ndarray):
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        u = spec.eigenvectors
        self.eigenvalues = spec.eigenvalues
        self.trace = spec.trace
        self._nngp_diag = np.einsum("ij,ij->j", u, kp.nngp_train @ u)
        self._y_proj_sq = (u.T @ targets) ** 2

    def _weighted(self, weights: np.ndarray) -> float:
        return float(weights @ self._nngp_diag + weights @ self._y_proj_sq)

    def path_length_bound(self, tau: float) -> float:
        tau = _check_tau(tau)
        g = self.eigenvalues * (1.0 - _decay(self.eigenvalues, tau, rate=2.0))
        return math.sqrt(0.5 * self._weighted(g))

    def itheta_d_lower(self, tau: float) -> float:
        tau = _check_tau(tau)
        if np.isinf(tau):
            return math.inf
        lam = self.eigenvalues
        one_minus = -np.expm1(-tau * lam)
        # (1 - e^{-tau lam})^2 / lam; the lam = 0 limit is tau^2 lam -> 0
        f = np.where(lam > 0, one_minus**2 / np.where(lam > 0, lam, 1.0), 0.0)
        return self._weighted(f) + tau * self.trace

    def ditheta_d_dtau(self, tau: float) -> float:
        tau = _check_tau(tau)
        decay = _decay(self.eigenvalues, tau)
        return self._weighted(2.0 * (1.0 - decay) * decay) + self.trace


def path_length_bound(
    spec: SpectralOperator, kp: KernelPair, targets: np.ndarray, tau: float
) -> float:
    return TrajectoryFunctionals(spec, kp, targets).path_length_bound(tau)


def itheta_d_lower(
    spec: SpectralOperator, kp: KernelPair, targets: np.ndarray, tau: float
) -> float:
    return TrajectoryFunctionals(spec, kp, targets).itheta_d_lower(tau)


def ditheta_d_dtau(
    spec: SpectralOperator, kp: KernelPair, targets: np.ndarray, tau: float
) -> float:
    return TrajectoryFunctionals(spec, kp, targets).ditheta_d_dtau(tau)
