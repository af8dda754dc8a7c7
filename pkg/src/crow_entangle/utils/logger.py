"""
Logging module for crow-entangle.
Provides structured logging with rich console output and optional file logging.
"""

import logging
import sys
from typing import Any, Dict, Optional


def get_rich_modules():
    """Get rich modules when needed."""
    from rich.console import Console
    from rich.logging import RichHandler
    from rich.table import Table
    from rich.theme import Theme
    return Console, RichHandler, Table, Theme


class CrowLogger:
    """Logger with rich console output used by every component of the simulator."""

    def __init__(self, name: str = "crow", config: Optional[Any] = None):
        self.name = name
        self.config = config
        self.console = None
        self.logger: logging.Logger = logging.getLogger(name)

        self._setup_console()
        self._setup_logging()

    def _setup_console(self) -> None:
        """Setup rich console with the simulator theme."""
        try:
            Console, _, _, Theme = get_rich_modules()
            theme = Theme({
                "info": "cyan",
                "warning": "yellow",
                "error": "red",
                "critical": "red bold",
                "success": "green",
                "regime": "magenta bold",
                "metric": "bold white",
                "debug": "dim cyan",
            })
            self.console = Console(theme=theme, width=100, stderr=True)

            ui = getattr(self.config, "ui", None)
            if ui is not None and not getattr(ui, "enable_colors", True):
                self.console.no_color = True
        except ImportError:
            self.console = None

    def _level(self) -> int:
        logging_config = getattr(self.config, "logging", None)
        level_name = getattr(logging_config, "level", "INFO") if logging_config else "INFO"
        if getattr(self.config, "debug_mode", False):
            level_name = "DEBUG"
        return getattr(logging, str(level_name).upper(), logging.INFO)

    def _setup_logging(self) -> None:
        """Attach a rich handler (or a plain fallback) and the optional file handler."""
        self.logger.setLevel(self._level())
        self.logger.handlers.clear()
        self.logger.propagate = False

        logging_config = getattr(self.config, "logging", None)
        console_output = getattr(logging_config, "console_output", True) if logging_config else True

        if console_output:
            if self.console is not None and getattr(logging_config, "format", "rich") == "rich":
                try:
                    _, RichHandler, _, _ = get_rich_modules()
                    rich_handler = RichHandler(
                        console=self.console,
                        show_time=True,
                        show_path=False,
                        markup=True,
                        rich_tracebacks=True,
                    )
                    rich_handler.setLevel(self.logger.level)
                    rich_handler.setFormatter(logging.Formatter("%(message)s"))
                    self.logger.addHandler(rich_handler)
                except Exception:
                    self._setup_basic_handler()
            else:
                self._setup_basic_handler()

        file_path = getattr(logging_config, "file_path", None) if logging_config else None
        if file_path:
            file_handler = logging.FileHandler(file_path, encoding="utf-8")
            file_handler.setLevel(self.logger.level)
            file_handler.setFormatter(
                logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
            )
            self.logger.addHandler(file_handler)

    def _setup_basic_handler(self) -> None:
        """Setup basic console handler for logging."""
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(self.logger.level)
        console_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        self.logger.addHandler(console_handler)

    def info(self, message: str, **kwargs: Any) -> None:
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        self.logger.warning(message, **kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        self.logger.error(message, **kwargs)

    def critical(self, message: str, **kwargs: Any) -> None:
        self.logger.critical(message, **kwargs)

    def debug(self, message: str, **kwargs: Any) -> None:
        self.logger.debug(message, **kwargs)

    def success(self, message: str) -> None:
        """Log success message with custom styling."""
        if self.console is not None:
            try:
                self.console.print(f"✅ {message}", style="success")
                return
            except Exception:
                pass
        self.logger.info(f"✅ {message}")

    def print_table(self, data: Dict[str, Any], title: str = "") -> None:
        """Print a two-column key/value table."""
        if self.console is not None:
            try:
                _, _, Table, _ = get_rich_modules()
                table = Table(title=title, show_header=True, header_style="bold magenta")
                table.add_column("Setting", style="cyan")
                table.add_column("Value", style="white")
                for key, value in _flatten(data).items():
                    table.add_row(key, str(value))
                self.console.print(table)
                return
            except Exception:
                pass
        if title:
            print(f"\n{title}\n{'-' * len(title)}", file=sys.stderr)
        for key, value in _flatten(data).items():
            print(f"{key}: {value}", file=sys.stderr)

    def log_configuration(self) -> None:
        """Log the current configuration."""
        if self.config is not None and hasattr(self.config, "to_dict"):
            self.info("Configuration loaded")
            if getattr(self.config, "debug_mode", False):
                self.print_table(self.config.to_dict(), "Current Configuration")
        else:
            self.info("Configuration loaded (no config object)")

    def log_error_with_context(self, error: Exception, context: str = "", **kwargs: Any) -> None:
        """Log error with additional context."""
        details = ", ".join(f"{key}={value}" for key, value in kwargs.items())
        prefix = f"{context}: " if context else ""
        suffix = f" [{details}]" if details else ""
        self.error(f"{prefix}{type(error).__name__}: {error}{suffix}")

        if getattr(self.config, "debug_mode", False) and self.console is not None:
            try:
                self.console.print_exception()
            except Exception:
                pass


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


_loggers: Dict[str, CrowLogger] = {}
_global_config: Optional[Any] = None


def get_logger(name: str = "crow") -> CrowLogger:
    """Get or create the logger for a component."""
    if name not in _loggers:
        _loggers[name] = CrowLogger(name, _global_config)
    return _loggers[name]


def setup_logging(name: str = "crow", config: Optional[Any] = None) -> CrowLogger:
    """Install a configuration for all loggers and return the named one."""
    global _global_config
    _global_config = config
    for existing in list(_loggers):
        _loggers[existing] = CrowLogger(existing, config)
    _loggers[name] = CrowLogger(name, config)
    return _loggers[name]


Logger = CrowLogger
