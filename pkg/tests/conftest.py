import copy

import pytest

from src.dynamics.state import Mode, SimulationConfig
from src.forces.kernels import SmoothBoundedKernel
from src.forces.potentials import QuadraticPotential
from src.noise.levy import AlphaStable, LevyNoiseSpec
from src.utils.config import _APP_DEFAULTS


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the figure-scale acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: figure-scale acceptance test, only runs with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def make_config():
    """Small first-order config; keyword overrides replace any field."""

    def _make(**overrides) -> SimulationConfig:
        values = dict(
            n_particles=8,
            batch_size=2,
            fine_step=2.0 ** -6,
            batch_step=2.0 ** -4,
            horizon=2.0 ** -2,
            potential=QuadraticPotential(1.0),
            kernel=SmoothBoundedKernel(),
            noise=LevyNoiseSpec(jump_part=AlphaStable(1.5)),
            seed=3,
            mode=Mode.RBM,
        )
        values.update(overrides)
        return SimulationConfig(**values)

    return _make


@pytest.fixture
def app_config():
    return copy.deepcopy(_APP_DEFAULTS)
