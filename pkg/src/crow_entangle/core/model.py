"""
Core value types shared by the simulator: the two-cavity waveguide configuration,
2x2 complex matrices, the uniform time grid and spectral-regime validation.

All frequencies are expressed in units of the waveguide resonator frequency
omega0 once a configuration has been normalized; times are in units of 1/omega0.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values

from .errors import ConfigurationError, ValidationError, ValidationIssue

RESONANCE_TOLERANCE = 1e-12

_INT_FIELDS = ("n1", "n2")
_FLOAT_FIELDS = ("omega0", "xi0", "omega_c1", "omega_c2", "xi1", "xi2", "r1", "r2")
_FREQUENCY_FIELDS = ("omega0", "xi0", "omega_c1", "omega_c2", "xi1", "xi2")
CONVENIENCE_KEYS = ("eta", "omega_c", "r")


class Regime(str, Enum):
    """Position of a cavity frequency relative to the waveguide band."""

    RESONANT = "Resonant"
    OUT_OF_BAND = "OutOfBand"
    IN_BAND = "InBand"


def classify(omega: float, omega0: float, xi0: float) -> Regime:
    """Classify a cavity frequency against the band [omega0 - 2 xi0, omega0 + 2 xi0]."""
    detuning = abs(omega - omega0)
    if detuning <= RESONANCE_TOLERANCE * max(abs(omega0), 1.0):
        return Regime.RESONANT
    if detuning >= 2.0 * xi0:
        return Regime.OUT_OF_BAND
    return Regime.IN_BAND


@dataclass(frozen=True)
class SystemConfig:
    """Physical parameters of the two cavities and the waveguide.

    Sites are 1-based: site 0 is the hard wall terminating the waveguide.
    """

    omega0: float = 1.0
    xi0: float = 0.05
    omega_c1: float = 1.0
    omega_c2: float = 1.0
    xi1: float = 0.01
    xi2: float = 0.01
    n1: int = 1
    n2: int = 5
    r1: float = 1.0
    r2: float = 1.0

    @property
    def eta(self) -> Optional[float]:
        """Common coupling ratio xi_c/xi0, or None when the cavities differ."""
        if self.xi1 != self.xi2:
            return None
        return self.xi1 / self.xi0

    @property
    def etas(self) -> Tuple[float, float]:
        return self.xi1 / self.xi0, self.xi2 / self.xi0

    @property
    def band(self) -> Tuple[float, float]:
        return self.omega0 - 2.0 * self.xi0, self.omega0 + 2.0 * self.xi0

    @property
    def sites(self) -> Tuple[int, int]:
        return self.n1, self.n2

    @property
    def couplings(self) -> Tuple[float, float]:
        return self.xi1, self.xi2

    @property
    def cavity_frequencies(self) -> Tuple[float, float]:
        return self.omega_c1, self.omega_c2

    @property
    def squeezing(self) -> Tuple[float, float]:
        return self.r1, self.r2

    @property
    def regimes(self) -> Tuple[Regime, Regime]:
        return (
            classify(self.omega_c1, self.omega0, self.xi0),
            classify(self.omega_c2, self.omega0, self.xi0),
        )

    def with_overrides(self, **overrides: Any) -> "SystemConfig":
        """Return a copy with fields replaced.

        Besides the field names, ``eta`` sets both couplings to eta*xi0,
        ``omega_c`` sets both cavity frequencies and ``r`` both squeezings.
        Convenience keys are applied after the plain fields.
        """
        plain: Dict[str, Any] = {}
        for key, value in overrides.items():
            if key in _INT_FIELDS:
                plain[key] = _as_int(key, value)
            elif key in _FLOAT_FIELDS:
                plain[key] = _as_float(key, value)
            elif key not in CONVENIENCE_KEYS:
                raise ConfigurationError(f"Unknown configuration key: {key!r}")
        updated = replace(self, **plain)

        if "eta" in overrides:
            eta = _as_float("eta", overrides["eta"])
            updated = replace(updated, xi1=eta * updated.xi0, xi2=eta * updated.xi0)
        if "omega_c" in overrides:
            omega_c = _as_float("omega_c", overrides["omega_c"])
            updated = replace(updated, omega_c1=omega_c, omega_c2=omega_c)
        if "r" in overrides:
            r = _as_float("r", overrides["r"])
            updated = replace(updated, r1=r, r2=r)
        return updated

    def rescaled(self, factor: float) -> "SystemConfig":
        """Multiply every frequency by ``factor``."""
        return replace(self, **{name: getattr(self, name) * factor for name in _FREQUENCY_FIELDS})

    def normalized(self) -> "SystemConfig":
        """Express all frequencies in units of omega0."""
        return self.rescaled(1.0 / self.omega0)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """Stable sha256 of the canonical JSON form of the configuration."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ComplexMatrix2:
    """A finite 2x2 complex matrix (read-only)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        array = np.array(self.data, dtype=complex)
        if array.shape != (2, 2):
            raise ValueError(f"ComplexMatrix2 needs shape (2, 2), got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("ComplexMatrix2 entries must be finite")
        array.setflags(write=False)
        object.__setattr__(self, "data", array)

    @classmethod
    def identity(cls) -> "ComplexMatrix2":
        return cls(np.eye(2))

    @classmethod
    def zeros(cls) -> "ComplexMatrix2":
        return cls(np.zeros((2, 2)))

    def entry(self, i: int, j: int) -> complex:
        """Entry (i, j) with 1-based indices as in the physics notation."""
        return complex(self.data[i - 1, j - 1])

    def as_array(self) -> np.ndarray:
        return self.data.copy()

    def dagger(self) -> "ComplexMatrix2":
        return ComplexMatrix2(self.data.conj().T)

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.data, self.data.conj().T, rtol=0.0, atol=atol))

    def is_symmetric(self, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.data, self.data.T, rtol=0.0, atol=atol))

    def is_identity(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.data, np.eye(2), rtol=0.0, atol=atol))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = t0 + k*dt for k = 0..n_steps."""

    dt: float
    n_steps: int
    t0: float = 0.0

    @classmethod
    def from_tmax(cls, tmax: float, dt: float) -> "TimeGrid":
        if dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        return cls(dt=dt, n_steps=max(int(math.ceil(tmax / dt - 1e-9)), 0))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_steps + 1) * self.dt

    @property
    def t_max(self) -> float:
        return self.t0 + self.n_steps * self.dt

    def rescaled(self, factor: float) -> "TimeGrid":
        """Grid for frequencies multiplied by ``factor`` (times divide by it)."""
        return replace(self, dt=self.dt / factor, t0=self.t0 / factor)

    def to_dict(self) -> Dict[str, Any]:
        return {"t0": self.t0, "dt": self.dt, "n_steps": self.n_steps}


@dataclass
class ValidationResult:
    """Outcome of validate(): one regime per cavity, or the violated invariants."""

    regimes: Optional[Tuple[Regime, Regime]]
    issues: List[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def raise_for_issues(self) -> "ValidationResult":
        if self.issues:
            raise ValidationError(self.issues)
        return self


def validate(config: SystemConfig, grid: Optional[TimeGrid] = None) -> ValidationResult:
    """Check the configuration invariants and classify each cavity's regime."""
    issues: List[ValidationIssue] = []

    values = [getattr(config, name) for name in _FLOAT_FIELDS]
    if not all(math.isfinite(v) for v in values):
        issues.append(ValidationIssue("nonfinite_value", "all parameters must be finite"))
    if not config.xi0 > 0:
        issues.append(ValidationIssue("nonpositive_xi0", f"xi0 must be > 0, got {config.xi0}"))
    if config.xi1 < 0 or config.xi2 < 0:
        issues.append(ValidationIssue(
            "negative_coupling", f"couplings must be >= 0, got ({config.xi1}, {config.xi2})"))
    if config.n1 < 1 or config.n2 < 1:
        issues.append(ValidationIssue(
            "invalid_site", f"sites start at 1, got ({config.n1}, {config.n2})"))
    if config.n1 == config.n2:
        issues.append(ValidationIssue(
            "identical_sites", f"cavities cannot share site {config.n1}"))
    if min(config.omega0, config.omega_c1, config.omega_c2) <= 0:
        issues.append(ValidationIssue(
            "nonpositive_frequency", "omega0, omega_c1 and omega_c2 must be > 0"))
    if config.r1 < 0 or config.r2 < 0:
        issues.append(ValidationIssue(
            "negative_squeezing", f"squeezing must be >= 0, got ({config.r1}, {config.r2})"))

    if grid is not None:
        if not grid.dt > 0:
            issues.append(ValidationIssue("nonpositive_dt", f"dt must be > 0, got {grid.dt}"))
        if grid.n_steps < 1:
            issues.append(ValidationIssue("empty_grid", "time grid needs at least one step"))

    regimes = None if issues else config.regimes
    return ValidationResult(regimes=regimes, issues=issues)


@dataclass
class LoadedConfig:
    """A configuration file after overrides and normalization."""

    config: SystemConfig
    dt: Optional[float] = None
    tmax: Optional[float] = None
    extras: Dict[str, str] = field(default_factory=dict)
    scale: float = 1.0


def parse_override(text: str) -> Tuple[str, str]:
    """Split a ``key=value`` CLI override."""
    if "=" not in text:
        raise ConfigurationError(f"Override must look like key=value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip().lower()
    if not key:
        raise ConfigurationError(f"Override has an empty key: {text!r}")
    return key, value.strip()


def load_config_file(
    path: Union[str, Path],
    overrides: Optional[Mapping[str, str]] = None,
    base: Optional[SystemConfig] = None,
) -> LoadedConfig:
    """Read a flat key=value file, apply overrides and rescale to omega0 = 1."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Configuration file not found: {path}")

    raw: Dict[str, str] = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise ConfigurationError(f"{path}: key {key!r} has no value")
        raw[key.strip().lower()] = value
    return build_config(raw, overrides, base)


def build_config(
    raw: Mapping[str, str],
    overrides: Optional[Mapping[str, str]] = None,
    base: Optional[SystemConfig] = None,
) -> LoadedConfig:
    """Merge raw string settings with overrides (overrides win) into a LoadedConfig."""
    merged: Dict[str, str] = dict(raw)
    merged.update({key.lower(): value for key, value in (overrides or {}).items()})

    physical: Dict[str, str] = {}
    extras: Dict[str, str] = {}
    dt = tmax = None
    for key, value in merged.items():
        if key in _INT_FIELDS or key in _FLOAT_FIELDS or key in CONVENIENCE_KEYS:
            physical[key] = value
        elif key == "dt":
            dt = _as_float("dt", value)
        elif key == "tmax":
            tmax = _as_float("tmax", value)
        else:
            extras[key] = value

    config = (base or SystemConfig()).with_overrides(**physical)
    scale = config.omega0
    if scale <= 0:
        raise ValidationError([ValidationIssue("nonpositive_frequency", "omega0 must be > 0")])
    if scale != 1.0:
        config = config.normalized()
        dt = dt * scale if dt is not None else None
        tmax = tmax * scale if tmax is not None else None
    return LoadedConfig(config=config, dt=dt, tmax=tmax, extras=extras, scale=scale)


def _as_float(key: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key} must be a number, got {value!r}") from None


def _as_int(key: str, value: Any) -> int:
    number = _as_float(key, value)
    if not number.is_integer():
        raise ConfigurationError(f"{key} must be an integer, got {value!r}")
    return int(number)
