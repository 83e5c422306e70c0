"""Jointly Gaussian regression task with exact information quantities.

Inputs are x = eps_x L_x^T with standard-normal eps, and targets are a noisy
affine projection y = eps_y L_y^T + x A^T, so

    Sigma_x  = L_x L_x^T
    Sigma_y  = L_y L_y^T + A Sigma_x A^T
    Sigma_xy = Sigma_x A^T.

In the isotropic case (L_x = sigma_x I, L_y = sigma_y I) the information
quantities reduce to sums over the singular values S_i of A:

    I(X; Y) = 1/2 sum_i log(1 + sigma_x^2 S_i^2 / sigma_y^2)
    H(Y)    = n_y/2 log(2 pi e) + 1/2 sum_i log(sigma_y^2 + sigma_x^2 S_i^2)

and both are cross-checked against the determinant route
I = 1/2 log(|Sigma_y| / |Sigma_y - Sigma_xy^T Sigma_x^{-1} Sigma_xy|).

For scalar targets the optimal information-bottleneck trade-off is governed
by the squared canonical correlation rho^2 = 1 - exp(-2 I(X;Y)):

    I(Z; Y) = -1/2 log(1 - rho^2 (1 - exp(-2 R)))   at   I(Z; X) = R.

All quantities are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SPLIT_STREAMS = {"train": 0, "test": 1}
# sub-stream used to draw the mixing matrix, disjoint from the sample streams
_MIXING_STREAM = 17

_ISO_AGREEMENT_TOL = 1e-10


class TaskError(ValueError):
    """Raised for invalid task configuration or sampling arguments."""


@dataclass(frozen=True)
class GaussianTask:
    """Factors (L_x, L_y, A) of the joint Gaussian, plus isotropic scales."""

    lx: np.ndarray
    ly: np.ndarray
    mixing: np.ndarray
    sigma_x: float
    sigma_y: float
    seed: int

    def __post_init__(self):
        n_x, n_y = self.n_x, self.n_y
        if self.lx.shape != (n_x, n_x) or self.ly.shape != (n_y, n_y):
            raise TaskError("factor shapes are inconsistent with the mixing matrix")
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise TaskError("sigma_x and sigma_y must be positive")

    @property
    def n_x(self) -> int:
        return self.mixing.shape[1]

    @property
    def n_y(self) -> int:
        return self.mixing.shape[0]

    @property
    def input_cov(self) -> np.ndarray:
        return self.lx @ self.lx.T

    @property
    def target_cov(self) -> np.ndarray:
        return self.ly @ self.ly.T + self.mixing @ self.input_cov @ self.mixing.T

    @property
    def cross_cov(self) -> np.ndarray:
        return self.input_cov @ self.mixing.T

    @property
    def is_isotropic(self) -> bool:
        return np.array_equal(self.lx, self.sigma_x * np.eye(self.n_x)) and np.array_equal(
            self.ly, self.sigma_y * np.eye(self.n_y)
        )

    @classmethod
    def default(
        cls,
        seed: int = 0,
        n_x: int = 30,
        sigma_x: float = 1.0,
        sigma_y: float = 1.0,
        target_mi: float = 2.0,
    ) -> "GaussianTask":
        """Isotropic scalar-target task with the mixing row rescaled so that
        I(X; Y) equals ``target_mi`` nats exactly."""
        rng = np.random.default_rng([seed, _MIXING_STREAM])
        a = rng.standard_normal((1, n_x))
        # single singular value s: I = 1/2 log(1 + sigma_x^2 s^2 / sigma_y^2)
        s_target = np.sqrt(np.expm1(2.0 * target_mi)) * sigma_y / sigma_x
        a *= s_target / np.linalg.norm(a)
        return cls(
            lx=sigma_x * np.eye(n_x),
            ly=sigma_y * np.eye(1),
            mixing=a,
            sigma_x=sigma_x,
            sigma_y=sigma_y,
            seed=seed,
        )


@dataclass(frozen=True)
class TaskSample:
    inputs: np.ndarray
    targets: np.ndarray
    split: str

    def __post_init__(self):
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise TaskError("inputs and targets must have equal row counts")


def sample(task: GaussianTask, n: int, split: str) -> TaskSample:
    """Draw n points; bit-identical for identical (task.seed, split, n)."""
    if n < 1:
        raise TaskError(f"n must be >= 1, got {n}")
    if split not in _SPLIT_STREAMS:
        raise TaskError(f"split must be one of {tuple(_SPLIT_STREAMS)}, got {split!r}")
    rng = np.random.default_rng([task.seed, _SPLIT_STREAMS[split]])
    eps_x = rng.standard_normal((n, task.n_x))
    eps_y = rng.standard_normal((n, task.n_y))
    inputs = eps_x @ task.lx.T
    targets = eps_y @ task.ly.T + inputs @ task.mixing.T
    return TaskSample(inputs=inputs, targets=targets, split=split)


def _mi_determinant(task: GaussianTask) -> float:
    sx = task.input_cov
    sign, logdet_x = np.linalg.slogdet(sx)
    if sign <= 0 or np.linalg.cond(sx) > 1e12:
        raise TaskError("input covariance is singular")
    sy = task.target_cov
    sxy = task.cross_cov
    resid = sy - sxy.T @ np.linalg.solve(sx, sxy)
    return 0.5 * (np.linalg.slogdet(sy)[1] - np.linalg.slogdet(resid)[1])


def exact_mi(task: GaussianTask) -> float:
    """I(X; Y) in nats; closed form in the isotropic case, checked against
    the determinant route to 1e-10."""
    det_route = _mi_determinant(task)
    if not task.is_isotropic:
        return det_route
    svals = np.linalg.svd(task.mixing, compute_uv=False)
    closed = 0.5 * np.sum(np.log1p((task.sigma_x * svals / task.sigma_y) ** 2))
    if abs(closed - det_route) > _ISO_AGREEMENT_TOL * max(1.0, abs(closed)):
        raise TaskError(
            f"isotropic closed form ({closed!r}) and determinant route "
            f"({det_route!r}) disagree beyond 1e-10"
        )
    return float(closed)


def entropy_y(task: GaussianTask) -> float:
    """Marginal entropy H(Y) in nats."""
    if task.is_isotropic:
        svals = np.linalg.svd(task.mixing, compute_uv=False)
        spectrum = np.full(task.n_y, task.sigma_y**2)
        spectrum[: svals.shape[0]] += (task.sigma_x * svals) ** 2
        return float(0.5 * task.n_y * np.log(2.0 * np.pi * np.e) + 0.5 * np.sum(np.log(spectrum)))
    logdet = np.linalg.slogdet(task.target_cov)[1]
    return float(0.5 * task.n_y * np.log(2.0 * np.pi * np.e) + 0.5 * logdet)


def gib_frontier(task: GaussianTask, izx_grid: np.ndarray) -> np.ndarray:
    """Optimal I(Z; Y) at each I(Z; X) = R for the scalar-target Gaussian task."""
    if task.n_y != 1:
        raise TaskError("the frontier closed form covers scalar targets only")
    grid = np.asarray(izx_grid, dtype=np.float64)
    if np.any(grid < 0):
        raise TaskError("I(Z;X) values must be nonnegative")
    rho2 = -np.expm1(-2.0 * exact_mi(task))
    return -0.5 * np.log1p(rho2 * np.expm1(-2.0 * grid))
