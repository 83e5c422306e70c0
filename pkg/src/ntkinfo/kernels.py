"""Closed-form NNGP and NTK kernels for fully-connected ReLU and Erf networks.

Kernels are computed with the standard layer recursion for networks in the
NTK parameterization (pre-activations scaled by ``sigma_w / sqrt(fan_in)``,
biases by ``sigma_b``).  Writing ``K`` for the pre-activation covariance and
``Theta`` for the tangent kernel, the recursion over a point pair (x, x') is

    K^(1)     = sb2 + sw2 * <x, x'> / n_x
    K^(l+1)   = sb2 + sw2 * T(K^(l))
    Theta^(1) = K^(1)
    Theta^(l+1) = K^(l+1) + sw2 * Tdot(K^(l)) * Theta^(l)

where T and Tdot are the activation's Gaussian expectation map and its
derivative-expectation map.  ``depth`` counts hidden (activation) layers; a
final affine readout is applied on top, so the returned kernels are
``K^(depth+1)`` and ``Theta^(depth+1)``.

Closed forms, for a covariance block [[a, c], [c, b]]:

  ReLU:  T    = sqrt(a*b) / (2*pi) * (sin t + (pi - t) cos t),  cos t = c/sqrt(a*b)
         Tdot = (pi - t) / (2*pi)
  Erf:   T    = (2/pi) * asin( 2c / sqrt((1+2a)(1+2b)) )
         Tdot = (4/pi) / sqrt((1+2a)(1+2b) - 4c^2)

Everything here is a pure function of immutable inputs; disjoint kernel
blocks can be computed concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "erf")

# cos(t) may exceed [-1, 1] by rounding; clamp within this tolerance, reject
# beyond it (beyond indicates a logic bug, not floating-point noise).
_COS_CLAMP_TOL = 1e-12

# ReLU diagonal clamp so zero-variance points (possible only when sb2 == 0)
# keep the maps total.
_DIAG_FLOOR = 1e-30


class KernelError(ValueError):
    """Raised for invalid kernel inputs (non-finite data, broken covariances)."""


@dataclass(frozen=True)
class ArchitectureSpec:
    """Fully-connected architecture: all that the infinite-width kernels see.

    depth            number of hidden (activation) layers, >= 1
    activation       "relu" or "erf"
    weight_variance  sigma_w^2 > 0
    bias_variance    sigma_b^2 >= 0
    input_dim        n_x
    """

    depth: int
    activation: str
    weight_variance: float
    bias_variance: float
    input_dim: int

    def __post_init__(self):
        if self.depth < 1:
            raise KernelError(f"depth must be >= 1, got {self.depth}")
        if self.activation not in ACTIVATIONS:
            raise KernelError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not self.weight_variance > 0:
            raise KernelError(f"weight_variance must be > 0, got {self.weight_variance}")
        if self.bias_variance < 0:
            raise KernelError(f"bias_variance must be >= 0, got {self.bias_variance}")
        if self.input_dim < 1:
            raise KernelError(f"input_dim must be >= 1, got {self.input_dim}")


@dataclass(frozen=True)
class KernelPair:
    """NNGP and NTK blocks over a train set (N points) and test set (M points).

    nngp_train      (N, N)  NNGP over train points
    ntk_train       (N, N)  NTK over train points
    nngp_cross      (N, M)  NNGP between train and test
    ntk_cross       (M, N)  NTK between test (rows) and train (cols)
    nngp_test       (M, M)  NNGP over test points
    nngp_test_diag  (M,)    diagonal of nngp_test
    """

    nngp_train: np.ndarray
    ntk_train: np.ndarray
    nngp_cross: np.ndarray
    ntk_cross: np.ndarray
    nngp_test: np.ndarray
    nngp_test_diag: np.ndarray

    @property
    def n_train(self) -> int:
        return self.nngp_train.shape[0]

    @property
    def n_test(self) -> int:
        return self.nngp_test.shape[0]

    def joint_nngp(self) -> np.ndarray:
        """Assemble the NNGP over train+test; block order is [train; test]."""
        top = np.hstack([self.nngp_train, self.nngp_cross])
        bottom = np.hstack([self.nngp_cross.T, self.nngp_test])
        return np.vstack([top, bottom])

    def train_as_query(self) -> "KernelPair":
        """A pair whose query (test) blocks are the train points themselves."""
        return KernelPair(
            nngp_train=self.nngp_train,
            ntk_train=self.ntk_train,
            nngp_cross=self.nngp_train,
            ntk_cross=self.ntk_train,
            nngp_test=self.nngp_train,
            nngp_test_diag=np.diag(self.nngp_train).copy(),
        )


def _clamped_cos(num: np.ndarray, denom: np.ndarray) -> np.ndarray:
    cos = num / denom
    overshoot = np.max(np.abs(cos)) - 1.0
    if overshoot > _COS_CLAMP_TOL:
        raise KernelError(
            f"covariance correlation exceeds 1 by {overshoot:.3e}; "
            "inputs do not form a valid covariance"
        )
    return np.clip(cos, -1.0, 1.0)


def _relu_maps(cov: np.ndarray, diag: np.ndarray):
    """Gaussian expectation maps (T, Tdot) for ReLU (arc-cosine kernel)."""
    a = np.clip(diag, _DIAG_FLOOR, None)
    prod = np.sqrt(np.outer(a, a))
    cos = _clamped_cos(cov, prod)
    theta = np.arccos(cos)
    t = prod / (2.0 * np.pi) * (np.sin(theta) + (np.pi - theta) * cos)
    tdot = (np.pi - theta) / (2.0 * np.pi)
    return t, tdot


def _erf_maps(cov: np.ndarray, diag: np.ndarray):
    """Gaussian expectation maps (T, Tdot) for Erf."""
    s = 1.0 + 2.0 * diag
    outer = np.outer(s, s)
    # |2c| <= 2 sqrt(ab) <= sqrt((1+2a)(1+2b)), so the ratio is a valid sine
    # up to rounding; the same clamp tolerance applies.
    sin = _clamped_cos(2.0 * cov, np.sqrt(outer))
    t = (2.0 / np.pi) * np.arcsin(sin)
    tdot = (4.0 / np.pi) / np.sqrt(outer - 4.0 * cov**2)
    return t, tdot


_MAPS = {"relu": _relu_maps, "erf": _erf_maps}


def _check_finite(inputs: np.ndarray, name: str) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2:
        raise KernelError(f"{name} must be a 2-d array, got shape {inputs.shape}")
    bad = ~np.isfinite(inputs)
    if bad.any():
        row = int(np.nonzero(bad.any(axis=1))[0][0])
        raise KernelError(f"non-finite value in {name} at row {row}")
    return inputs


def kernel_matrices(arch: ArchitectureSpec, points: np.ndarray):
    """NNGP and NTK matrices over a single point set.

    Returns (nngp, ntk), both (P, P), symmetric by construction.
    """
    points = _check_finite(points, "points")
    if points.shape[1] != arch.input_dim:
        raise KernelError(
            f"points have dimension {points.shape[1]}, architecture expects {arch.input_dim}"
        )
    sw2, sb2 = arch.weight_variance, arch.bias_variance
    maps = _MAPS[arch.activation]
    k = sb2 + sw2 * (points @ points.T) / arch.input_dim
    theta = k.copy()
    for _ in range(arch.depth):
        t, tdot = maps(k, np.diag(k).copy())
        k = sb2 + sw2 * t
        theta = k + sw2 * tdot * theta
    return k, theta


def compute_kernels(
    arch: ArchitectureSpec,
    train_inputs: np.ndarray,
    test_inputs: np.ndarray | None = None,
) -> KernelPair:
    """Joint kernels over train and test points, sliced into blocks.

    The recursion runs once over the stacked point set so cross blocks are
    exactly consistent with the diagonal blocks.
    """
    train_inputs = _check_finite(train_inputs, "train_inputs")
    if test_inputs is None:
        test_inputs = np.empty((0, train_inputs.shape[1]))
    test_inputs = _check_finite(test_inputs, "test_inputs")
    n = train_inputs.shape[0]
    if n < 1:
        raise KernelError("need at least one train point")
    stacked = np.vstack([train_inputs, test_inputs])
    nngp, ntk = kernel_matrices(arch, stacked)
    return KernelPair(
        nngp_train=nngp[:n, :n],
        ntk_train=ntk[:n, :n],
        nngp_cross=nngp[:n, n:],
        ntk_cross=ntk[n:, :n],
        nngp_test=nngp[n:, n:],
        nngp_test_diag=np.diag(nngp[n:, n:]).copy(),
    )
