"""Gradient-flow prediction dynamics of the infinite-width ensemble.

Training an infinitely wide network by gradient flow on squared loss moves
its outputs by an affine map of the initial outputs,

    z(x, tau) = z0(x) - Theta(x, X) Theta^{-1} (I - exp(-tau Theta)) (z0(X) - Y),

so over the ensemble of initializations (z0 ~ GP(0, K)) the predictions stay
Gaussian at every training time:

    mean(x, tau) = Theta(x, X) Phi_tau Y
    cov(x, x', tau) = K(x, x') - G K(X, x') - K(x, X) G^T + G K G^T,
        G = Theta(x, X) Phi_tau,   Phi_tau = Theta^{-1} (I - exp(-tau Theta)).

The covariance here is the symmetrized form of the direct expansion; at
x = x' it reduces to the usual K(x,x) + G (K G^T - 2 K(X, x)) expression.

All matrix functions of Theta are evaluated through a single
eigendecomposition (``SpectralOperator``) so a whole grid of training times
reuses one O(N^3) factorization.  The scalar profile

    h(lam, tau) = (1 - exp(-tau*lam)) / lam

is evaluated with a series fallback for small lam*tau and the conventions
h(0, tau) = tau and, at tau = inf, h = 1/lam on the positive spectrum and 0
on the null space (components in the kernel's null space stay at their
initialization).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelPair

# below this, (1 - exp(-x))/x is evaluated by series; truncation error is
# below 1e-12 relative at the switch point
_SERIES_CUTOFF = 1e-4

_SYMMETRY_RTOL = 1e-10
_CLAMP_REL = 1e-12


class DynamicsError(ValueError):
    """Raised for invalid spectral or predictive inputs."""


@dataclass(frozen=True)
class SpectralOperator:
    """Eigendecomposition of the train-set NTK.

    eigenvalues   (N,) nonincreasing, clamped to >= 0
    eigenvectors  (N, N) orthogonal, columns match eigenvalues
    clamp_floor   eigenvalues below this were set to exactly 0
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clamp_floor: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    def matrix_function(self, values: np.ndarray) -> np.ndarray:
        """U diag(values) U^T for per-eigenvalue scalars ``values``."""
        u = self.eigenvectors
        return (u * values) @ u.T


@dataclass(frozen=True)
class PredictiveDistribution:
    """Gaussian ensemble prediction at training time tau.

    mean           (M,) predictive mean per query point
    covariance     (M, M) full covariance, or None in diagonal-only mode
    variance_diag  (M,) per-point predictive variance
    train_targets  (N,) targets the dynamics were fit to
    """

    tau: float
    mean: np.ndarray
    covariance: np.ndarray | None
    variance_diag: np.ndarray
    train_targets: np.ndarray


def spectral_decompose(ntk_train: np.ndarray, clamp_rel: float = _CLAMP_REL) -> SpectralOperator:
    """Eigendecompose a symmetric PSD matrix, clamping the tiny spectrum to 0."""
    ntk_train = np.asarray(ntk_train, dtype=np.float64)
    if not np.isfinite(ntk_train).all():
        raise DynamicsError("non-finite entries in matrix")
    scale = np.abs(ntk_train).max() or 1.0
    if np.abs(ntk_train - ntk_train.T).max() > _SYMMETRY_RTOL * scale:
        raise DynamicsError("matrix is not symmetric within tolerance")
    eigvals, eigvecs = np.linalg.eigh(ntk_train)
    eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]
    floor = clamp_rel * max(eigvals[0], 0.0)
    eigvals = np.where(eigvals < floor, 0.0, eigvals)
    return SpectralOperator(eigenvalues=eigvals, eigenvectors=eigvecs, clamp_floor=floor)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if np.isnan(tau) or tau < 0:
        raise DynamicsError(f"tau must be >= 0 (or inf), got {tau}")
    return tau


def phi_profile(eigenvalues: np.ndarray, tau: float) -> np.ndarray:
    """h(lam, tau) = (1 - exp(-tau lam))/lam per eigenvalue, stably."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    tau = _check_tau(tau)
    if np.isinf(tau):
        return np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    x = tau * lam
    series = tau * (1.0 - x / 2.0 + x * x / 6.0)
    big = x >= _SERIES_CUTOFF
    safe_lam = np.where(big, lam, 1.0)
    direct = (1.0 - np.exp(-np.where(big, x, 0.0))) / safe_lam
    return np.where(big, direct, series)


def phi_tau(spec: SpectralOperator, tau: float) -> np.ndarray:
    """The matrix Theta^{-1}(I - exp(-tau Theta)) in the operator's basis."""
    return spec.matrix_function(phi_profile(spec.eigenvalues, tau))


class PredictiveEvaluator:
    """Precomputed eigenbasis projections for fast evaluation over a tau grid.

    Everything depending only on (kernels, targets) is projected once; each
    tau then costs one (M, N) rescale and one (M, N) x (N, N) product for the
    diagonal variance, or an extra eigendecomposition for the full covariance.
    Instances are immutable after construction and safe to share across
    threads.
    """

    def __init__(self, spec: SpectralOperator, kp: KernelPair, targets: np.ndarray):
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        if targets.shape[0] != kp.n_train:
            raise DynamicsError(
                f"targets have length {targets.shape[0]}, train set has {kp.n_train}"
            )
        if spec.dim != kp.n_train:
            raise DynamicsError("spectral operator and kernel train blocks disagree")
        u = spec.eigenvectors
        self.spec = spec
        self.targets = targets
        self._cross_proj = kp.ntk_cross @ u                # (M, N)
        self._targets_proj = u.T @ targets                 # (N,)
        self._nngp_proj = u.T @ kp.nngp_train @ u          # (N, N)
        self._cross_nngp_proj = u.T @ kp.nngp_cross        # (N, M)
        self._test_diag = kp.nngp_test_diag.copy()
        self._nngp_test = kp.nngp_test

    def mean_and_diag(self, tau: float):
        """Predictive mean and per-point variance at tau."""
        h = phi_profile(self.spec.eigenvalues, tau)
        scaled = self._cross_proj * h                      # (M, N)
        mean = scaled @ self._targets_proj
        quad = np.einsum("ij,ij->i", scaled @ self._nngp_proj, scaled)
        cross = np.einsum("ij,ji->i", scaled, self._cross_nngp_proj)
        var = self._test_diag - 2.0 * cross + quad
        return mean, np.clip(var, 0.0, None)

    def mean_and_cov(self, tau: float):
        """Predictive mean and full symmetrized, eigen-floored covariance."""
        h = phi_profile(self.spec.eigenvalues, tau)
        scaled = self._cross_proj * h
        mean = scaled @ self._targets_proj
        quad = scaled @ self._nngp_proj @ scaled.T
        cross = scaled @ self._cross_nngp_proj
        cov = self._nngp_test - cross - cross.T + quad
        cov = 0.5 * (cov + cov.T)
        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals.size and eigvals[0] < 0:
            cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
            cov = 0.5 * (cov + cov.T)
        return mean, cov


def predictive(
    spec: SpectralOperator,
    kp: KernelPair,
    targets: np.ndarray,
    tau: float,
    diag_only: bool = False,
) -> PredictiveDistribution:
    """Ensemble predictive distribution over the pair's test points at tau."""
    tau = _check_tau(tau)
    ev = PredictiveEvaluator(spec, kp, targets)
    if diag_only:
        mean, var = ev.mean_and_diag(tau)
        cov = None
    else:
        mean, cov = ev.mean_and_cov(tau)
        var = np.clip(np.diag(cov).copy(), 0.0, None)
    return PredictiveDistribution(
        tau=tau, mean=mean, covariance=cov, variance_diag=var, train_targets=ev.targets
    )
