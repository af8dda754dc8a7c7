"""
Core components of crow-entangle.

Configuration, the physical model, waveguide spectral functions, the three
propagator routes, Gaussian moments and the scenario presets.
"""

from .config import Config, get_config
from .errors import ConfigurationError, CrowError
from .model import ComplexMatrix2, Regime, SystemConfig, TimeGrid, validate
from .propagator import PropagatorTrajectory
from .scenarios import Scenario, list_presets


def get_run_orchestrator():
    """Get the RunOrchestrator class (lazy import to avoid circular dependencies)."""
    from .run_orchestrator import RunOrchestrator
    return RunOrchestrator


__all__ = [
    'Config',
    'get_config',
    'CrowError',
    'ConfigurationError',
    'ComplexMatrix2',
    'Regime',
    'SystemConfig',
    'TimeGrid',
    'validate',
    'PropagatorTrajectory',
    'Scenario',
    'list_presets',
    'get_run_orchestrator',
]
