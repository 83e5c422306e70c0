import numpy as np
import pytest

from ntkinfo import ArchitectureSpec, compute_kernels, spectral_decompose


@pytest.fixture(scope="session")
def small_instance():
    """Depth-3 Erf kernels over 20 train / 5 test random points with targets."""
    rng = np.random.default_rng(101)
    x_train = rng.standard_normal((20, 30))
    x_test = rng.standard_normal((5, 30))
    targets = rng.standard_normal(20)
    arch = ArchitectureSpec(3, "erf", 1.5, 0.01, 30)
    kp = compute_kernels(arch, x_train, x_test)
    return kp, spectral_decompose(kp.ntk_train), targets
