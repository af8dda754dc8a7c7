"""
Pytest configuration and fixtures for crow-entangle tests.

This module provides common fixtures and configuration for all tests.
"""

import sys
import tempfile
from pathlib import Path

import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from crow_entangle.core.config import get_config, reset_config
from crow_entangle.core.model import SystemConfig, TimeGrid


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch, temp_dir):
    """Every test starts from default settings with quiet logging and a private output dir."""
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setenv("CROW_OUTPUT_DIR", str(temp_dir / "runs"))
    monkeypatch.setenv("CROW_KERNEL_VERIFY_SAMPLES", "3")
    reset_config()
    yield
    reset_config()


@pytest.fixture
def settings():
    """The process-wide Config built from the test environment."""
    return get_config()


@pytest.fixture
def make_config():
    """Factory for configurations with xi0 = 0.05 and squeezing r = 1."""

    def factory(**overrides) -> SystemConfig:
        base = SystemConfig(omega0=1.0, xi0=0.05, n1=1, n2=5, r1=1.0, r2=1.0)
        return base.with_overrides(**overrides)

    return factory


@pytest.fixture
def resonant_config(make_config):
    return make_config(eta=0.08)


@pytest.fixture
def out_of_band_config(make_config):
    return make_config(eta=0.2, omega_c=1.2)


@pytest.fixture
def in_band_config(make_config):
    return make_config(eta=0.2, omega_c=1.03)


@pytest.fixture
def short_grid():
    return TimeGrid(dt=0.5, n_steps=40)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "unit: mark test as a unit test")
    config.addinivalue_line("markers", "integration: mark test as an integration test")
    config.addinivalue_line("markers", "slow: mark test as slow")


def pytest_collection_modifyitems(config, items):
    """Automatically mark tests based on their location."""
    for item in items:
        if any(part in str(item.fspath) for part in ("integration", "cli", "orchestrator")):
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)
