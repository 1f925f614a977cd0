import numpy as np
import pytest

from parsimid import InputSpec, StateSpaceModel, armax_to_ss, simulate


@pytest.fixture(scope="session")
def benchmark():
    """The scalar ARMAX benchmark: pole 0.7, K = 1.2, innovations var 4."""
    return armax_to_ss(-0.7, 1.0, 0.5, 4.0)


@pytest.fixture(scope="session")
def noise_free():
    """Deterministic variant: same input channel, K = 0 and zero noise."""
    return StateSpaceModel(a=[[0.7]], b=[[1.0]], c=[[1.0]], k=[[0.0]],
                           sigma_e_half=[[0.0]])


@pytest.fixture(scope="session")
def benchmark_traj(benchmark):
    return simulate(benchmark, 2500, InputSpec.white(1.0, 101), 202)


def simulate_white(model, nbar, seed):
    """One-seed convenience wrapper used across the statistical tests."""
    return simulate(model, nbar, InputSpec.white(1.0, seed),
                    seed + (1 << 31))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
