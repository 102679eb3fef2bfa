import logging

import pytest

from noisyhawkes import SimulationConfig, simulate_noisy_hawkes

from .test_utils import bivariate_params, univariate_params


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run long Monte Carlo checks"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def uni_theta():
    """Univariate parameters (mu, alpha, beta, lambda0) = (1, 0.5, 1, 0.6)."""
    return univariate_params()


@pytest.fixture
def biv_theta():
    """
    Bivariate parameters of the second support scenario.

    Returns:
        NoisyHawkesParams with mu = (1, 1), alpha = ((0.5, 0), (0.4, 0.4)),
        beta = (1, 1.3) and lambda0 = 0.5.
    """
    return bivariate_params(scenario=2)


@pytest.fixture
def uni_events(uni_theta):
    """A univariate noisy series on [0, 1000], about 2600 events."""
    return simulate_noisy_hawkes(uni_theta, SimulationConfig(horizon=1000.0, seed=7))


@pytest.fixture
def biv_events(biv_theta):
    """A bivariate noisy series on [0, 600]."""
    return simulate_noisy_hawkes(biv_theta, SimulationConfig(horizon=600.0, seed=11))


@pytest.fixture(autouse=True)
def test_logger():
    """Set up test logger and suppress warnings during tests."""
    # Set up a dedicated logger for tests
    test_log = logging.getLogger("noisy_hawkes")

    # Store original state to restore later
    original_level = test_log.level
    original_handlers = list(test_log.handlers)

    # Set to ERROR level during tests to suppress warnings
    test_log.setLevel(logging.ERROR)

    # Clear any existing handlers to avoid duplicates
    if test_log.hasHandlers():
        test_log.handlers.clear()

    handler = logging.StreamHandler()
    formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    handler.setFormatter(formatter)
    test_log.addHandler(handler)

    yield test_log

    # Cleanup: restore original level and handlers
    test_log.setLevel(original_level)
    test_log.handlers.clear()
    for h in original_handlers:
        test_log.addHandler(h)
