"""
Exception hierarchy for crow-entangle.

Every error carries the process exit code the CLI maps it to: configuration
problems exit with 2, failures while computing a run exit with 1.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Sequence


class CrowError(Exception):
    """Base class for all errors raised by the package."""

    exit_code: int = 1


class ConfigurationError(CrowError):
    """A configuration value, file or override could not be accepted."""

    exit_code = 2


@dataclass(frozen=True)
class ValidationIssue:
    """One violated configuration invariant."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ValidationError(ConfigurationError):
    """Raised when validate() finds one or more violated invariants."""

    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues: List[ValidationIssue] = list(issues)
        super().__init__("; ".join(str(issue) for issue in self.issues))

    @property
    def codes(self) -> List[str]:
        return [issue.code for issue in self.issues]


class StepSizeError(ConfigurationError):
    """The Volterra step is too coarse for the fastest scale of the problem."""

    def __init__(self, binding_scale: str, value: float, dt: float, limit: float):
        self.binding_scale = binding_scale
        self.value = value
        self.dt = dt
        self.limit = limit
        super().__init__(
            f"dt={dt:g} too large: dt*{binding_scale}={dt * value:.4g} "
            f"must stay below {limit:g}"
        )


class UnsupportedConfigurationError(ConfigurationError):
    """The requested closed form does not apply to this configuration."""


class HorizonError(ConfigurationError):
    """The finite chain would reflect the wavefront back before t_max."""

    def __init__(self, t_max: float, horizon: float):
        self.t_max = t_max
        self.horizon = horizon
        super().__init__(
            f"t_max={t_max:g} exceeds the reflection-free horizon {horizon:g}; "
            "use a longer chain or a shorter grid"
        )


class SpectralDomainError(CrowError, ValueError):
    """A band quantity was evaluated at or beyond a band edge."""


class KernelConvergenceError(CrowError):
    """Adaptive quadrature of the memory kernel missed its tolerance."""

    def __init__(self, message: str, estimate: complex, error_estimate: float):
        self.estimate = estimate
        self.error_estimate = error_estimate
        super().__init__(f"{message} (estimate={estimate}, error~{error_estimate:.3g})")


class LambShiftConvergenceError(CrowError):
    """The principal-value integral did not settle."""

    def __init__(self, message: str, estimate: float, windows: Optional[Sequence[Any]] = None):
        self.estimate = estimate
        self.windows = list(windows or [])
        super().__init__(f"{message} (estimate={estimate:.6g}, windows={self.windows})")


class NumericalFailureError(CrowError):
    """Non-finite values appeared while stepping a trajectory."""

    def __init__(self, message: str, last_good_index: int):
        self.last_good_index = last_good_index
        super().__init__(f"{message} (last good sample {last_good_index})")


class PhysicalityError(CrowError):
    """A covariance matrix violates the uncertainty relation."""


class ArtifactFormatError(CrowError):
    """A stored trajectory has an unknown header or version."""


class OutputError(CrowError):
    """The output directory cannot be created or written."""
