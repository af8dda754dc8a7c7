"""
Utility components for crow-entangle: logging, artifact files and the CLI.
"""

from .logger import Logger


def get_cli():
    """Get the CLI group (lazy import to avoid circular dependencies)."""
    from .cli import cli
    return cli


__all__ = [
    'Logger',
    'get_cli',
]
