import numpy as np
import pytest

from sparsevar import design, examples
from sparsevar.pipeline import PipelineConfig
from sparsevar.varmodel import VarModel, simulate


@pytest.fixture(scope="session")
def example1():
    return examples.example1_model()


@pytest.fixture(scope="session")
def example2():
    return examples.example2_model()


@pytest.fixture(scope="session")
def example1_series(example1):
    """One fixed n=100 draw from the 6-variable example, shared by tests
    that only need a realistic design."""
    return simulate(example1, n=100, seed=12345)


@pytest.fixture(scope="session")
def example1_design(example1_series):
    return design.build(example1_series, d=1)


@pytest.fixture(scope="session")
def example1_config():
    return PipelineConfig(d=1, lam=0.11, lambda_eps=0.11)


@pytest.fixture(scope="session")
def example1_group():
    return examples.example1_group()


@pytest.fixture(scope="session")
def ar1_model():
    """Scalar AR(1) with a = 0.8 and unit innovation variance."""
    return VarModel(np.array([[[0.8]]]), np.array([[1.0]]))


def random_stable_model(gen, p, d, radius=0.7):
    """Random VAR(d) scaled to a prescribed companion spectral radius,
    with a random diagonally dominant innovation covariance."""
    from sparsevar.varmodel import companion_matrix, spectral_radius

    coeffs = gen.normal(scale=0.5, size=(d, p, p))
    rho = spectral_radius(companion_matrix(coeffs))
    if rho > 0:
        # scaling lag s by c^s maps every companion eigenvalue to c times
        # itself, so the new radius is exactly `radius`
        c = radius / rho
        for s in range(d):
            coeffs[s] *= c ** (s + 1)
    root = gen.normal(size=(p, p)) / np.sqrt(p)
    sigma = root @ root.T + 0.5 * np.eye(p)
    return VarModel(coeffs, sigma)
