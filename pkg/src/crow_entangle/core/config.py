"""
Configuration module for crow-entangle.
Centralizes solver, analysis, output and logging settings read from the environment.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes", "on")


@dataclass
class LoggingConfig:
    """Logging configuration settings."""
    level: str = field(default_factory=lambda: os.getenv("LOG_LEVEL", "INFO"))
    format: str = field(default_factory=lambda: os.getenv("LOG_FORMAT", "rich"))
    file_path: Optional[str] = field(default_factory=lambda: os.getenv("LOG_FILE"))
    console_output: bool = field(default_factory=lambda: _env_bool("LOG_CONSOLE", "true"))


@dataclass
class SolverConfig:
    """Numerical settings for the propagator solvers and the kernel backends."""
    corrector_tolerance: float = field(default_factory=lambda: float(os.getenv("CROW_CORRECTOR_TOLERANCE", "1e-12")))
    max_corrector_sweeps: int = field(default_factory=lambda: int(os.getenv("CROW_MAX_CORRECTOR_SWEEPS", "50")))
    kernel_backend: str = field(default_factory=lambda: os.getenv("CROW_KERNEL_BACKEND", "bessel"))
    kernel_tolerance: float = field(default_factory=lambda: float(os.getenv("CROW_KERNEL_TOLERANCE", "1e-12")))
    quad_limit: int = field(default_factory=lambda: int(os.getenv("CROW_QUAD_LIMIT", "500")))
    kernel_verify_samples: int = field(default_factory=lambda: int(os.getenv("CROW_KERNEL_VERIFY_SAMPLES", "8")))
    history_mode: str = field(default_factory=lambda: os.getenv("CROW_HISTORY_MODE", "auto"))
    history_block: int = field(default_factory=lambda: int(os.getenv("CROW_HISTORY_BLOCK", "2048")))
    passivity_tolerance: float = field(default_factory=lambda: float(os.getenv("CROW_PASSIVITY_TOLERANCE", "1e-8")))
    chain_length: int = field(default_factory=lambda: int(os.getenv("CROW_CHAIN_LENGTH", "400")))
    horizon_guard: float = field(default_factory=lambda: float(os.getenv("CROW_HORIZON_GUARD", "0.8")))
    step_scale_limit: float = field(default_factory=lambda: float(os.getenv("CROW_STEP_SCALE_LIMIT", "0.1")))
    lamb_shift_method: str = field(default_factory=lambda: os.getenv("CROW_LAMB_SHIFT_METHOD", "subtraction"))

    def __post_init__(self) -> None:
        if self.kernel_backend not in ("bessel", "quadrature"):
            raise ValueError(f"Unknown kernel backend: {self.kernel_backend}")
        if self.history_mode not in ("auto", "direct", "blocked"):
            raise ValueError(f"Unknown history mode: {self.history_mode}")
        if self.lamb_shift_method not in ("subtraction", "excision"):
            raise ValueError(f"Unknown Lamb shift method: {self.lamb_shift_method}")


@dataclass
class AnalysisConfig:
    """Thresholds used when turning trajectories into entanglement summaries."""
    esd_threshold: float = field(default_factory=lambda: float(os.getenv("CROW_ESD_THRESHOLD", "1e-6")))
    steady_rtol: float = field(default_factory=lambda: float(os.getenv("CROW_STEADY_RTOL", "1e-6")))
    steady_window_rates: float = field(default_factory=lambda: float(os.getenv("CROW_STEADY_WINDOW_RATES", "10")))
    singular_floor: float = field(default_factory=lambda: float(os.getenv("CROW_SINGULAR_FLOOR", "1e-12")))


@dataclass
class OutputConfig:
    """Where and how run artifacts are written."""
    output_dir: Path = field(default_factory=lambda: Path(os.getenv("CROW_OUTPUT_DIR", "runs")))
    workers: int = field(default_factory=lambda: int(os.getenv("CROW_WORKERS", "1")))
    float_digits: int = field(default_factory=lambda: int(os.getenv("CROW_FLOAT_DIGITS", "17")))
    save_binary: bool = field(default_factory=lambda: _env_bool("CROW_SAVE_BINARY", "true"))


@dataclass
class UIConfig:
    """User interface configuration settings."""
    enable_colors: bool = field(default_factory=lambda: _env_bool("UI_ENABLE_COLORS", "true"))


@dataclass
class Config:
    """Main configuration class that aggregates all configuration sections."""

    debug_mode: bool = field(default_factory=lambda: _env_bool("DEBUG_MODE", "false"))
    environment: str = field(default_factory=lambda: os.getenv("ENVIRONMENT", "development"))

    logging: LoggingConfig = field(default_factory=LoggingConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    ui: UIConfig = field(default_factory=UIConfig)

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary format."""
        return {
            "debug_mode": self.debug_mode,
            "environment": self.environment,
            "logging": {
                "level": self.logging.level,
                "format": self.logging.format,
                "file_path": self.logging.file_path,
                "console_output": self.logging.console_output,
            },
            "solver": {
                "corrector_tolerance": self.solver.corrector_tolerance,
                "max_corrector_sweeps": self.solver.max_corrector_sweeps,
                "kernel_backend": self.solver.kernel_backend,
                "kernel_tolerance": self.solver.kernel_tolerance,
                "quad_limit": self.solver.quad_limit,
                "kernel_verify_samples": self.solver.kernel_verify_samples,
                "history_mode": self.solver.history_mode,
                "history_block": self.solver.history_block,
                "passivity_tolerance": self.solver.passivity_tolerance,
                "chain_length": self.solver.chain_length,
                "horizon_guard": self.solver.horizon_guard,
                "step_scale_limit": self.solver.step_scale_limit,
                "lamb_shift_method": self.solver.lamb_shift_method,
            },
            "analysis": {
                "esd_threshold": self.analysis.esd_threshold,
                "steady_rtol": self.analysis.steady_rtol,
                "steady_window_rates": self.analysis.steady_window_rates,
                "singular_floor": self.analysis.singular_floor,
            },
            "output": {
                "output_dir": str(self.output.output_dir),
                "workers": self.output.workers,
                "float_digits": self.output.float_digits,
                "save_binary": self.output.save_binary,
            },
            "ui": {
                "enable_colors": self.ui.enable_colors,
            },
        }


# Global configuration instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance, loading a local .env on first use."""
    global _config
    if _config is None:
        load_dotenv()
        _config = Config()
    return _config


def reset_config() -> None:
    """Drop the cached configuration so the next call re-reads the environment."""
    global _config
    _config = None
