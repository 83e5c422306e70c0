"""Independent Monte Carlo ground truth for the analytic kernels and dynamics.

Two oracles live here:

* Finite-width sampling.  Fully-connected networks are drawn in the same NTK
  parameterization the analytic kernels assume (pre-activations scaled by
  sigma_w / sqrt(fan_in), biases by sigma_b) at a large but finite width.
  The empirical NNGP is the average output gram E[z z^T]; the empirical NTK
  is the average parameter-Jacobian gram J J^T, assembled layer by layer from
  the usual forward/backward factorization

      (J J^T)(x, x') = sum_l  (sw^2/n_l) <a_l(x), a_l(x')> <d_l(x), d_l(x')>
                             + sb^2 <d_l(x), d_l(x')>

  with activations a_l and backpropagated sensitivities d_l, so no autodiff
  framework is involved.  Each drawn trunk carries many independent scalar
  readout heads: every (network, head) pair is a valid sample of the scalar
  network, which beats down readout sampling noise without extra trunk draws.
  ``empirical_kernel_suite`` additionally shares trunk weight draws across a
  batch of architectures (stacking their scaled activations into one matrix
  product per layer), which keeps the wide-width checks affordable; sharing
  draws across architectures leaves each estimate unbiased.

* Ensemble sampling.  ``ensemble_trajectories`` draws initial functions
  jointly over train+test from N(0, K_joint) and pushes them through the
  gradient-flow affine map, yielding empirical moments of z(x, tau) to test
  the closed-form predictive distribution against.

Network draws use per-network seeds spawned from one SeedSequence and are
reduced in network order with pairwise summation, so parallel and serial
evaluation orders agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special

from .dynamics import SpectralOperator, _check_tau, phi_profile
from .kernels import ArchitectureSpec, KernelPair, _check_finite

_JOINT_PSD_RTOL = 1e-10


class OracleError(ValueError):
    """Raised for invalid oracle configuration or non-PSD sampling covariances."""


@dataclass(frozen=True)
class FiniteWidthConfig:
    """Sampling plan for the finite-width kernel estimates.

    nngp_heads / ntk_heads: independent scalar readout heads per trunk used
    for the output gram and the Jacobian gram respectively.  The NTK cost
    scales with ntk_heads (each head is backpropagated), the NNGP cost barely
    depends on nngp_heads, and the Jacobian gram is far less noisy per head,
    hence the asymmetric defaults.
    """

    arch: ArchitectureSpec
    width: int = 4096
    n_networks: int = 200
    nngp_heads: int = 128
    ntk_heads: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.width < 64:
            raise OracleError(f"width must be >= 64, got {self.width}")
        if self.n_networks < 1:
            raise OracleError("n_networks must be >= 1")
        if not 1 <= self.ntk_heads <= self.nngp_heads:
            raise OracleError("need 1 <= ntk_heads <= nngp_heads")


def _activation_fns(name: str):
    if name == "relu":
        return (
            lambda h: np.maximum(h, 0.0),
            lambda h: (h > 0).astype(h.dtype),
        )
    return (
        scipy.special.erf,
        lambda h: np.float32(2.0 / np.sqrt(np.pi)) * np.exp(-h * h),
    )


class _TrunkBuffers:
    """Preallocated weight buffers reused across network draws; refilling in
    place avoids page-fault churn from fresh large allocations."""

    def __init__(self, input_dim: int, width: int, max_depth: int, term_depths, heads: int):
        self.hidden = [
            np.empty((input_dim if l == 0 else width, width), dtype=np.float32)
            for l in range(max_depth)
        ]
        self.readout = {d: np.empty((width, heads), dtype=np.float32) for d in term_depths}


def _delta_gram(delta: np.ndarray, heads: int) -> np.ndarray:
    """Mean over heads of the sensitivity gram; delta is (width, n, heads)."""
    return np.tensordot(delta, delta, axes=[(0, 2), (0, 2)]).astype(np.float64) / heads


def empirical_kernel_suite(
    archs: list[ArchitectureSpec],
    inputs: np.ndarray,
    width: int = 4096,
    n_networks: int = 200,
    nngp_heads: int = 128,
    ntk_heads: int = 16,
    seed: int = 0,
):
    """Finite-width (nngp, ntk) estimates for each architecture.

    All architectures must share ``input_dim``; they share raw weight draws
    (each rescales by its own sigma_w, sigma_b), so one pass over the trunk
    weights serves the whole batch.
    """
    if not archs:
        raise OracleError("need at least one architecture")
    inputs = _check_finite(inputs, "inputs")
    n, n_x = inputs.shape
    if any(a.input_dim != n_x for a in archs):
        raise OracleError("all architectures must match the input dimension")
    max_depth = max(a.depth for a in archs)
    term_depths = sorted({a.depth for a in archs})
    x32 = np.ascontiguousarray(inputs, dtype=np.float32)
    bufs = _TrunkBuffers(n_x, width, max_depth, term_depths, nngp_heads)
    sqrt_w = np.sqrt(np.float32(width))

    nngp_per_net = np.empty((n_networks, len(archs), n, n))
    ntk_per_net = np.empty((n_networks, len(archs), n, n))

    for net, child in enumerate(np.random.SeedSequence(seed).spawn(n_networks)):
        rng = np.random.default_rng(child)
        hidden_biases = []
        for l in range(max_depth):
            rng.standard_normal(out=bufs.hidden[l].ravel(), dtype=np.float32)
            hidden_biases.append(rng.standard_normal(width, dtype=np.float32))
        readout_biases = {}
        for d in term_depths:
            rng.standard_normal(out=bufs.readout[d].ravel(), dtype=np.float32)
            readout_biases[d] = rng.standard_normal(nngp_heads, dtype=np.float32)

        # forward: stack every active architecture's scaled activations so the
        # layer weights are streamed once per layer
        acts = [[x32] for _ in archs]
        dphis = [[] for _ in archs]
        for l in range(max_depth):
            active = [c for c in range(len(archs)) if l < archs[c].depth]
            n_in = bufs.hidden[l].shape[0]
            scaled = np.vstack(
                [np.float32(np.sqrt(archs[c].weight_variance) / np.sqrt(n_in)) * acts[c][-1]
                 for c in active]
            )
            pre = scaled @ bufs.hidden[l]
            for pos, c in enumerate(active):
                arch = archs[c]
                h = pre[pos * n : (pos + 1) * n] + np.float32(np.sqrt(arch.bias_variance)) * hidden_biases[l]
                phi, dphi = _activation_fns(arch.activation)
                acts[c].append(phi(h))
                dphis[c].append(dphi(h))

        # readouts and per-layer gram assembly
        deltas: dict[int, list] = {}  # backward level -> [(arch index, delta)]
        for c, arch in enumerate(archs):
            sw = np.float32(np.sqrt(arch.weight_variance))
            sb2 = arch.bias_variance
            top = acts[c][arch.depth]
            wr = bufs.readout[arch.depth]
            z = (sw / sqrt_w) * (top @ wr) + np.float32(np.sqrt(sb2)) * readout_biases[arch.depth]
            nngp_per_net[net, c] = (z @ z.T).astype(np.float64) / nngp_heads
            top_gram = (top @ top.T).astype(np.float64)
            ntk_per_net[net, c] = (arch.weight_variance / width) * top_gram + sb2
            init = dphis[c][arch.depth - 1].T[:, :, None] * ((sw / sqrt_w) * wr[:, :ntk_heads])[:, None, :]
            deltas.setdefault(arch.depth, []).append((c, init))

        for level in range(max_depth, 0, -1):
            blocks = deltas.pop(level, [])
            if not blocks:
                continue
            for c, delta in blocks:
                arch = archs[c]
                prev = acts[c][level - 1]
                layer_gram = (arch.weight_variance / prev.shape[1]) * (
                    prev @ prev.T
                ).astype(np.float64) + arch.bias_variance
                ntk_per_net[net, c] += _delta_gram(delta, ntk_heads) * layer_gram
            if level == 1:
                continue
            stacked = np.concatenate(
                [d.reshape(width, -1) for _, d in blocks], axis=1
            )
            propagated = bufs.hidden[level - 1] @ stacked
            offset = 0
            nxt = deltas.setdefault(level - 1, [])
            for c, _ in blocks:
                arch = archs[c]
                cols = n * ntk_heads
                part = propagated[:, offset : offset + cols].reshape(width, n, ntk_heads)
                offset += cols
                sw = np.float32(np.sqrt(arch.weight_variance))
                nxt.append((c, dphis[c][level - 2].T[:, :, None] * ((sw / sqrt_w) * part)))

    nngp = np.sum(nngp_per_net, axis=0) / n_networks
    ntk = np.sum(ntk_per_net, axis=0) / n_networks
    return [(nngp[c], ntk[c]) for c in range(len(archs))]


def empirical_kernels(cfg: FiniteWidthConfig, inputs: np.ndarray):
    """Both finite-width kernel estimates for one architecture in one pass."""
    return empirical_kernel_suite(
        [cfg.arch],
        inputs,
        width=cfg.width,
        n_networks=cfg.n_networks,
        nngp_heads=cfg.nngp_heads,
        ntk_heads=cfg.ntk_heads,
        seed=cfg.seed,
    )[0]


def empirical_nngp(cfg: FiniteWidthConfig, inputs: np.ndarray) -> np.ndarray:
    """Average output gram E[z z^T] over freshly initialized finite networks."""
    return empirical_kernels(cfg, inputs)[0]


def empirical_ntk(cfg: FiniteWidthConfig, inputs: np.ndarray) -> np.ndarray:
    """Average Jacobian gram J J^T over freshly initialized finite networks."""
    return empirical_kernels(cfg, inputs)[1]


@dataclass(frozen=True)
class EnsembleMoments:
    """Empirical mean/covariance of z(., tau), rows ordered [train; test]."""

    mean: np.ndarray
    cov: np.ndarray
    n_draws: int

    @property
    def mean_se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None) / self.n_draws)

    def cov_se(self) -> np.ndarray:
        """Elementwise standard error of the covariance estimate (Gaussian)."""
        d = np.clip(np.diag(self.cov), 0.0, None)
        return np.sqrt((np.outer(d, d) + self.cov**2) / self.n_draws)


def ensemble_trajectories(
    spec: SpectralOperator,
    kp_joint: KernelPair,
    targets: np.ndarray,
    tau: float,
    n_draws: int,
    seed: int = 0,
) -> EnsembleMoments:
    """Moments of the trained ensemble from joint draws z0 ~ N(0, K_joint).

    Each draw is mapped by z(tau) = z0 - Theta(., X) Phi_tau (z0(X) - Y); the
    resulting sample mean/covariance are the oracle for the closed-form
    predictive distribution.
    """
    tau = _check_tau(tau)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    joint = kp_joint.joint_nngp()
    eigvals, eigvecs = np.linalg.eigh(joint)
    if eigvals.size and eigvals[0] < 0 and eigvals[0] < -_JOINT_PSD_RTOL * max(eigvals[-1], 0.0):
        raise OracleError("joint NNGP is not positive semidefinite")
    root = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    rng = np.random.default_rng(seed)
    z0 = root @ rng.standard_normal((joint.shape[0], n_draws))
    n_train = kp_joint.n_train
    resid = z0[:n_train] - targets[:, None]
    u = spec.eigenvectors
    h = phi_profile(spec.eigenvalues, tau)
    proj = u.T @ resid
    z = z0
    z[:n_train] -= u @ ((spec.eigenvalues * h)[:, None] * proj)
    z[n_train:] -= (kp_joint.ntk_cross @ u) @ (h[:, None] * proj)
    return EnsembleMoments(mean=z.mean(axis=1), cov=np.cov(z), n_draws=n_draws)
