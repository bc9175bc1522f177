"""Pytest configuration and fixtures."""

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lawcollapse.config import get_settings
from lawcollapse.models import DiscreteLaw

settings.register_profile(
    "lawcollapse",
    derandomize=True,
    max_examples=100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("lawcollapse")


@pytest.fixture(autouse=True)
def test_environment(monkeypatch):
    """Run every test against default settings."""
    for name in list(os.environ):
        if name.startswith("LAWCOLLAPSE_"):
            monkeypatch.delenv(name)
    monkeypatch.setenv("LAWCOLLAPSE_LOG_LEVEL", "WARNING")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    """Seeded generator for randomised property checks."""
    return np.random.default_rng(20240611)


@pytest.fixture
def key_z():
    """Z with P(Z = -1) = 2/3 and P(Z = 2) = 1/3."""
    return DiscreteLaw.from_atoms([(-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)])

