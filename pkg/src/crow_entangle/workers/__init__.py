"""
Workers for crow-entangle.

A simulation worker executes one expanded run of a scenario.
"""


def get_simulation_worker():
    """Get the SimulationWorker class (lazy import to avoid circular dependencies)."""
    from .simulation_worker import SimulationWorker
    return SimulationWorker


__all__ = [
    'get_simulation_worker',
]
