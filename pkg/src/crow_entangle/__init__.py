"""
crow-entangle: exact non-Markovian entanglement dynamics of two distant
nanocavities side-coupled to a coupled-resonator optical waveguide.

- Spectral density, memory kernel and Lamb shift of the waveguide band
- Exact (Volterra), weak-coupling and finite-chain propagating functions
- Gaussian moments, logarithmic negativity, purity, sudden death and birth
- Figure presets, parameter sweeps and CSV/JSON artifacts from the CLI
"""

__version__ = "0.1.0"
__author__ = "crow-entangle developers"
__description__ = "Non-Markovian entanglement dynamics of cavities on a coupled-resonator waveguide"

from .core import (
    ComplexMatrix2,
    Config,
    PropagatorTrajectory,
    Regime,
    Scenario,
    SystemConfig,
    TimeGrid,
    get_config,
    validate,
)
from .utils import Logger

__all__ = [
    '__version__',
    '__author__',
    '__description__',
    'ComplexMatrix2',
    'Config',
    'PropagatorTrajectory',
    'Regime',
    'Scenario',
    'SystemConfig',
    'TimeGrid',
    'get_config',
    'validate',
    'Logger',
    'get_run_orchestrator',
    'get_simulation_worker',
    'get_cli',
]


def get_run_orchestrator():
    """Get the RunOrchestrator class (lazy import to avoid circular dependencies)."""
    from .core import get_run_orchestrator
    return get_run_orchestrator()


def get_simulation_worker():
    """Get the SimulationWorker class."""
    from .workers import get_simulation_worker
    return get_simulation_worker()


def get_cli():
    """Get the click entry point."""
    from .utils import get_cli
    return get_cli()
