"""Shared markets for the test suite."""
import numpy as np
import pytest

from pyopc.market import MarketParams
from pyopc.numerics import QuadratureConfig
from pyopc.simulate import ScenarioMixture

REFERENCE_R = 0.1025


@pytest.fixture
def reference_market():
    """n = 2, T = 1, r = 0, a = (0.05, 0.06), sigma = diag(0.2, 0.3), x0 = 1."""
    return MarketParams.constant([0.05, 0.06], np.diag([0.2, 0.3]), rate=0.0, horizon=1.0, x0=1.0)


@pytest.fixture
def degenerate_market():
    """Drift equal to the rate: zero market price of risk."""
    return MarketParams.constant([0.03, 0.03], np.diag([0.2, 0.3]), rate=0.03, horizon=1.0, x0=1.0)


@pytest.fixture
def two_scenario_mixture():
    """One stock, sigma = 0.2, R in {0.04, 0.16} with equal probability."""
    low = MarketParams.constant([0.04], [[0.2]])
    high = MarketParams.constant([0.08], [[0.2]])
    return ScenarioMixture.from_pairs([(low, 0.5), (high, 0.5)])


@pytest.fixture
def quad():
    return QuadratureConfig()


def random_spd_market(rng: np.random.Generator, n: int) -> MarketParams:
    """Single-interval market with a random well-conditioned volatility matrix."""
    vol = rng.normal(scale=0.1, size=(n, n)) + np.diag(rng.uniform(0.15, 0.4, size=n))
    drift = rng.uniform(-0.05, 0.12, size=n)
    return MarketParams.constant(drift, vol, rate=0.01)


def within_three_se(values, target) -> bool:
    values = np.asarray(values, dtype=float)
    se = values.std(ddof=1) / np.sqrt(values.size)
    return abs(values.mean() - target) <= 3.0 * se
