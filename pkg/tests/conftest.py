import numpy as np
import pytest

from lookahead import envs
from lookahead.mdp import deterministic_rewards, longshot_rewards


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))


@pytest.fixture
def small_mdp():
    """A stochastic MDP with S=3, A=2, H=3"""
    return envs.random_mdp(3, 2, 3, seed=11).mdp


@pytest.fixture
def tiny_mdp():
    """A stochastic MDP with S=2, A=2, H=2"""
    return envs.random_mdp(2, 2, 2, seed=5).mdp


@pytest.fixture
def small_rewards(small_mdp):
    return envs.random_rewards(small_mdp, seed=3)


@pytest.fixture
def tiny_longshots(tiny_mdp):
    r = envs.random_rewards(tiny_mdp, seed=8).expectation
    return longshot_rewards(r, 0.2)


@pytest.fixture
def unit_rewards():
    def make(mdp):
        return deterministic_rewards(
            np.broadcast_to(mdp.available, mdp.shape).astype(float)
        )

    return make


def pytest_addoption(parser):
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="run long acceptance checks",
    )


def pytest_collection_modifyitems(config, items):  # pragma: no cover
    if config.getoption("--slow"):
        # --slow given in cli: do not skip slow tests
        return
    skip_slow = pytest.mark.skip(reason="need --slow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
