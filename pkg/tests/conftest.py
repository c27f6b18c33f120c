import numpy as np
import pytest

from arcm import ModelSpec, SyntheticSpec, gen_synthetic, make_objective


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def random_symmetric(rng, d, scale=1.0):
    a = rng.standard_normal((d, d))
    return scale * 0.5 * (a + a.T)


@pytest.fixture(scope="session")
def logistic_desk():
    """The logistic desk instance: n=200, d=50, chi=0.1."""
    ds = gen_synthetic(SyntheticSpec(n=200, d=50, label_noise=0.05,
                                     task="classification", seed=100))
    return make_objective(ModelSpec(kind="logistic_nonconvex", dataset=ds,
                                    chi=0.1))


@pytest.fixture(scope="session")
def robust_desk():
    """The robust-regression desk instance: n=200, d=50."""
    ds = gen_synthetic(SyntheticSpec(n=200, d=50, task="regression", seed=100))
    return make_objective(ModelSpec(kind="robust_linear", dataset=ds))
