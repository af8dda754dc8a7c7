"""
Spectral structure of the waveguide seen by the two cavities.

The band is omega_k = omega0 - 2 xi0 cos k for k in [0, pi]. Integrals over the
band are written in k, where dω = 2 xi0 sin k dk cancels the inverse square-root
edge singularity of the density of states.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from ..utils.logger import get_logger
from .config import SolverConfig, get_config
from .errors import KernelConvergenceError, LambShiftConvergenceError, SpectralDomainError
from .model import ComplexMatrix2, SystemConfig

ArrayLike = Union[float, Sequence[float], np.ndarray]

_I_POWERS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

# relative distance from a band edge below which a frequency counts as on the edge
_EDGE_TOLERANCE = 1e-12

# largest 2 xi0 τ at which the Bessel cache is spot-checked against quadrature
_VERIFY_MAX_PHASE = 200.0

# accepted quad() error estimate, relative to max(1, |value|)
_LAMB_ACCEPT = 1e-8

logger = get_logger("spectral")


def _site(i: int, config: SystemConfig) -> int:
    if i == 1:
        return config.n1
    if i == 2:
        return config.n2
    raise ValueError(f"cavity index must be 1 or 2, got {i}")


def _coupling(i: int, config: SystemConfig) -> float:
    return config.xi1 if i == 1 else config.xi2


def _wavenumber(omega: ArrayLike, config: SystemConfig) -> np.ndarray:
    """k(ω) in the open band; raises outside it or on an edge."""
    omega_arr = np.asarray(omega, dtype=float)
    offset = omega_arr - config.omega0
    if np.any(np.abs(offset) >= 2.0 * config.xi0 * (1.0 - _EDGE_TOLERANCE)):
        raise SpectralDomainError(
            f"frequency outside the open band ({config.band[0]:g}, {config.band[1]:g})"
        )
    return np.arccos(-offset / (2.0 * config.xi0))


def _scalar_or_array(value: np.ndarray) -> Union[float, np.ndarray]:
    return float(value) if np.ndim(value) == 0 else value


def density_of_states(omega: ArrayLike, config: SystemConfig) -> Union[float, np.ndarray]:
    """ρ(ω) = 1/sqrt(4 xi0² - (ω - omega0)²) strictly inside the band."""
    k = _wavenumber(omega, config)
    return _scalar_or_array(1.0 / (2.0 * config.xi0 * np.sin(k)))


def coupling_profile(i: int, omega: ArrayLike, config: SystemConfig) -> Union[float, np.ndarray]:
    """V_i(ω) = sqrt(2/π) xi_i sin(n_i k(ω))."""
    k = _wavenumber(omega, config)
    value = math.sqrt(2.0 / math.pi) * _coupling(i, config) * np.sin(_site(i, config) * k)
    return _scalar_or_array(value)


def spectral_density(i: int, j: int, omega: ArrayLike, config: SystemConfig) -> Union[float, np.ndarray]:
    """J_ij(ω) = 2π ρ(ω) V_i(ω) V_j(ω) inside the band."""
    rho = density_of_states(omega, config)
    return _scalar_or_array(
        2.0 * math.pi * np.asarray(rho) * np.asarray(coupling_profile(i, omega, config))
        * np.asarray(coupling_profile(j, omega, config))
    )


@dataclass(frozen=True)
class SpectralDensityMatrix:
    """Band-aware J(ω): zero on and beyond the band edges."""

    config: SystemConfig

    @property
    def band_edges(self) -> Tuple[float, float]:
        return self.config.band

    def entry(self, i: int, j: int, omega: ArrayLike) -> Union[float, np.ndarray]:
        omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
        cos_k = (self.config.omega0 - omega_arr) / (2.0 * self.config.xi0)
        inside = np.abs(cos_k) < 1.0 - _EDGE_TOLERANCE
        values = np.zeros_like(omega_arr)
        if np.any(inside):
            k = np.arccos(cos_k[inside])
            values[inside] = (
                2.0 * _coupling(i, self.config) * _coupling(j, self.config)
                * np.sin(_site(i, self.config) * k) * np.sin(_site(j, self.config) * k)
                / (self.config.xi0 * np.sin(k))
            )
        return float(values[0]) if np.ndim(omega) == 0 else values

    def __call__(self, omega: ArrayLike) -> np.ndarray:
        """Full matrix; shape (2, 2) for scalar ω, (..., 2, 2) for arrays."""
        j11 = np.asarray(self.entry(1, 1, omega))
        j22 = np.asarray(self.entry(2, 2, omega))
        j12 = np.asarray(self.entry(1, 2, omega))
        return np.stack([np.stack([j11, j12], axis=-1), np.stack([j12, j22], axis=-1)], axis=-2)


@dataclass(frozen=True)
class MemoryKernelSample:
    """Lab-frame memory kernel g(τ) at one delay."""

    tau: float
    g: ComplexMatrix2


def memory_kernel_quadrature(
    i: int,
    j: int,
    tau: float,
    config: SystemConfig,
    tolerance: Optional[float] = None,
    limit: Optional[int] = None,
) -> complex:
    """g_ij(τ) by adaptive Gauss-Kronrod quadrature of the k-space integral.

    ``tolerance`` is absolute on the normalised integral
    ∫ sin(n_i k) sin(n_j k) e^{2i xi0 τ cos k} dk. Negative τ is accepted.
    """
    solver = get_config().solver
    tolerance = solver.kernel_tolerance if tolerance is None else tolerance
    limit = solver.quad_limit if limit is None else limit

    n_i, n_j = _site(i, config), _site(j, config)
    x = 2.0 * config.xi0 * tau

    def real_part(k: float) -> float:
        return math.sin(n_i * k) * math.sin(n_j * k) * math.cos(x * math.cos(k))

    def imag_part(k: float) -> float:
        return math.sin(n_i * k) * math.sin(n_j * k) * math.sin(x * math.cos(k))

    parts = []
    for integrand, label in ((real_part, "real"), (imag_part, "imaginary")):
        result = integrate.quad(
            integrand, 0.0, math.pi, epsabs=tolerance, epsrel=0.0, limit=limit, full_output=1
        )
        value, abserr = result[0], result[1]
        if len(result) > 3 or abserr > tolerance:
            estimate = (2.0 / math.pi) * _coupling(i, config) * _coupling(j, config) * value
            raise KernelConvergenceError(
                f"{label} part of g_{i}{j}({tau:g}) did not converge", estimate, abserr
            )
        parts.append(value)

    integral = complex(parts[0], parts[1])
    prefactor = (2.0 / math.pi) * _coupling(i, config) * _coupling(j, config)
    return complex(prefactor * np.exp(-1j * config.omega0 * tau) * integral)


def _bessel_bracket(i: int, j: int, taus: np.ndarray, config: SystemConfig) -> np.ndarray:
    """i^{|d|} J_{|d|}(2 xi0 τ) - i^{s} J_{s}(2 xi0 τ), valid for any real τ."""
    n_i, n_j = _site(i, config), _site(j, config)
    d, s = abs(n_i - n_j), n_i + n_j
    x = 2.0 * config.xi0 * np.asarray(taus, dtype=float)
    sign = np.sign(x)
    ax = np.abs(x)
    bessel_d = special.jv(d, ax) * np.where(sign < 0, (-1.0) ** d, 1.0)
    bessel_s = special.jv(s, ax) * np.where(sign < 0, (-1.0) ** s, 1.0)
    return _I_POWERS[d % 4] * bessel_d - _I_POWERS[s % 4] * bessel_s


def memory_kernel_bessel(
    i: int, j: int, tau: ArrayLike, config: SystemConfig
) -> Union[complex, np.ndarray]:
    """Closed-form g_ij(τ) through Bessel functions of the first kind."""
    taus = np.asarray(tau, dtype=float)
    value = (
        _coupling(i, config) * _coupling(j, config)
        * np.exp(-1j * config.omega0 * taus) * _bessel_bracket(i, j, taus, config)
    )
    return complex(value) if np.ndim(value) == 0 else value


def kernel_sample(tau: float, config: SystemConfig) -> MemoryKernelSample:
    g12 = memory_kernel_bessel(1, 2, tau, config)
    matrix = np.array([
        [memory_kernel_bessel(1, 1, tau, config), g12],
        [g12, memory_kernel_bessel(2, 2, tau, config)],
    ])
    return MemoryKernelSample(tau=tau, g=ComplexMatrix2(matrix))


def rotating_kernel(taus: np.ndarray, config: SystemConfig) -> np.ndarray:
    """g̃(τ) = e^{i omega0 τ} g(τ) stacked as (len(taus), 2, 2)."""
    taus = np.asarray(taus, dtype=float)
    values = np.empty((taus.size, 2, 2), dtype=complex)
    values[:, 0, 0] = config.xi1 ** 2 * _bessel_bracket(1, 1, taus, config)
    values[:, 1, 1] = config.xi2 ** 2 * _bessel_bracket(2, 2, taus, config)
    values[:, 0, 1] = config.xi1 * config.xi2 * _bessel_bracket(1, 2, taus, config)
    values[:, 1, 0] = values[:, 0, 1]
    return values


@dataclass(frozen=True)
class KernelCache:
    """Rotating-frame kernel on the solver's uniform delay grid, indexed by step."""

    dt: float
    backend: str
    values: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, step: int) -> np.ndarray:
        return self.values[step]

    def entry(self, i: int, j: int, step: int) -> complex:
        return complex(self.values[step, i - 1, j - 1])

    @classmethod
    def build(
        cls,
        config: SystemConfig,
        dt: float,
        n_steps: int,
        settings: Optional[SolverConfig] = None,
    ) -> "KernelCache":
        settings = settings or get_config().solver
        taus = np.arange(n_steps + 1) * dt

        if settings.kernel_backend == "bessel":
            values = rotating_kernel(taus, config)
            cache = cls(dt=dt, backend="bessel", values=values)
            cache.verify(config, settings)
        else:
            values = np.empty((n_steps + 1, 2, 2), dtype=complex)
            for step, tau in enumerate(taus):
                phase = np.exp(1j * config.omega0 * tau)
                for i, j in ((1, 1), (2, 2), (1, 2)):
                    values[step, i - 1, j - 1] = phase * memory_kernel_quadrature(
                        i, j, tau, config, settings.kernel_tolerance, settings.quad_limit
                    )
                values[step, 1, 0] = values[step, 0, 1]
            cache = cls(dt=dt, backend="quadrature", values=values)

        cache.values.setflags(write=False)
        logger.debug(f"Kernel cache built: {n_steps + 1} delays, backend={cache.backend}")
        return cache

    def verify(self, config: SystemConfig, settings: SolverConfig) -> None:
        """Compare the cached closed form with quadrature on a few delays."""
        samples = settings.kernel_verify_samples
        if samples <= 0:
            return
        scale = max(config.xi1, config.xi2) ** 2
        if scale == 0.0:
            return
        last = min(self.n_steps, int(_VERIFY_MAX_PHASE / (2.0 * config.xi0 * self.dt)))
        steps = np.unique(np.linspace(0, last, samples).astype(int))
        worst = 0.0
        for step in steps:
            tau = step * self.dt
            phase = np.exp(1j * config.omega0 * tau)
            for i, j in ((1, 1), (2, 2), (1, 2)):
                reference = phase * memory_kernel_quadrature(
                    i, j, tau, config, settings.kernel_tolerance, settings.quad_limit
                )
                worst = max(worst, abs(reference - self.values[step, i - 1, j - 1]) / scale)
        if worst > 1e-9:
            raise KernelConvergenceError(
                "Bessel kernel disagrees with quadrature", complex(worst), worst
            )
        logger.debug(f"Bessel kernel verified on {steps.size} delays (max rel. diff {worst:.2e})")


def _principal_quad(
    integrand, a: float, b: float, tolerance: float, limit: int, scale: float = 1.0, **kwargs: Any
) -> float:
    """quad() that refuses results whose error estimate misses the accepted bound."""
    value, abserr = integrate.quad(integrand, a, b, epsabs=tolerance, epsrel=tolerance, limit=limit, **kwargs)
    if not math.isfinite(value) or abserr > _LAMB_ACCEPT * max(1.0, abs(value)):
        raise LambShiftConvergenceError(
            f"quadrature over [{a:.6g}, {b:.6g}] did not converge (error estimate {abserr:.3g})",
            scale * value,
        )
    return value


def _lamb_numerator(n_i: int, n_j: int):
    def f(k: float) -> float:
        return math.sin(n_i * k) * math.sin(n_j * k)

    def df(k: float) -> float:
        return n_i * math.cos(n_i * k) * math.sin(n_j * k) + n_j * math.sin(n_i * k) * math.cos(n_j * k)

    return f, df


def lamb_shift(
    i: int,
    j: int,
    omega_c: float,
    config: SystemConfig,
    method: Optional[str] = None,
    tolerance: float = 1e-12,
) -> float:
    """Principal value δω_ij = P∫ dω/2π J_ij(ω)/(ω - omega_c).

    In-band values use singular-part subtraction by default: in k the
    subtracted term f(k_c)/(cos k_c - cos k) integrates to zero over [0, π].
    ``method="excision"`` cuts a shrinking symmetric window around omega_c
    and Richardson-extrapolates the window sequence instead.
    """
    settings = get_config().solver
    method = method or settings.lamb_shift_method
    prefactor = (2.0 / math.pi) * _coupling(i, config) * _coupling(j, config)
    if prefactor == 0.0:
        return 0.0

    xi0 = config.xi0
    z = (config.omega0 - omega_c) / (2.0 * xi0)
    f, df = _lamb_numerator(_site(i, config), _site(j, config))
    limit = settings.quad_limit

    def denominator(k: float) -> float:
        return 2.0 * xi0 * (z - math.cos(k))

    if abs(z) >= 1.0:
        value = _principal_quad(lambda k: f(k) / denominator(k), 0.0, math.pi, tolerance, limit, prefactor)
        return prefactor * value

    k_c = math.acos(z)
    if method == "subtraction":
        f_c = f(k_c)
        slope = df(k_c) / (2.0 * xi0 * math.sin(k_c))

        def regular(k: float) -> float:
            if abs(k - k_c) < 1e-9:
                return slope
            return (f(k) - f_c) / denominator(k)

        value = _principal_quad(regular, 0.0, math.pi, tolerance, limit, prefactor, points=[k_c])
        return prefactor * value

    if method == "excision":
        return prefactor * _excised_principal_value(f, denominator, z, xi0, tolerance, limit)

    raise ValueError(f"Unknown principal-value method: {method}")


def _excised_principal_value(f, denominator, z: float, xi0: float, tolerance: float, limit: int) -> float:
    """Symmetric excision in ω with Richardson extrapolation in the window width."""
    edge_gap = 2.0 * xi0 * (1.0 - abs(z))
    eps = 0.25 * min(edge_gap, xi0)
    windows = []
    table = []
    previous = None

    for level in range(10):
        k_lo = math.acos(min(z + eps / (2.0 * xi0), 1.0))
        k_hi = math.acos(max(z - eps / (2.0 * xi0), -1.0))
        left = _principal_quad(lambda k: f(k) / denominator(k), 0.0, k_lo, tolerance, limit)
        right = _principal_quad(lambda k: f(k) / denominator(k), k_hi, math.pi, tolerance, limit)
        windows.append(eps)

        row = [left + right]
        # error expansion in odd powers of the window half-width
        for order in range(1, level + 1):
            factor = 2.0 ** (2 * order - 1)
            row.append((factor * row[order - 1] - table[-1][order - 1]) / (factor - 1.0))
        table.append(row)

        estimate = row[-1]
        if previous is not None and abs(estimate - previous) <= max(tolerance, 1e-10 * abs(estimate)):
            return estimate
        previous = estimate
        eps /= 2.0

    raise LambShiftConvergenceError("window extrapolation did not settle", previous or 0.0, windows)


def lamb_shift_matrix(omega_c: float, config: SystemConfig, method: Optional[str] = None) -> np.ndarray:
    """Real symmetric 2x2 matrix of δω_ij at omega_c."""
    d11 = lamb_shift(1, 1, omega_c, config, method)
    d22 = lamb_shift(2, 2, omega_c, config, method)
    d12 = lamb_shift(1, 2, omega_c, config, method)
    return np.array([[d11, d12], [d12, d22]])


def markovian_rates(omega_c: float, config: SystemConfig) -> ComplexMatrix2:
    """Time-independent damping γ = J(omega_c)/2 (zero outside the band)."""
    return ComplexMatrix2(0.5 * SpectralDensityMatrix(config)(omega_c))


def effective_hamiltonian(omega_c: float, config: SystemConfig) -> ComplexMatrix2:
    """Renormalized frequency matrix omega_c·I - δω of the Markovian propagator.

    Out of the band this is the whole generator: a waveguide-mediated
    beam splitter between the cavities.
    """
    return ComplexMatrix2(omega_c * np.eye(2) - lamb_shift_matrix(omega_c, config))


@dataclass(frozen=True)
class CollectiveModes:
    """Bright/dark decomposition d1 = sinθ a1 + cosθ a2, d2 = cosθ a1 - sinθ a2."""

    omega: float
    theta: float
    bright_coupling: float

    @property
    def dark_weights(self) -> Tuple[float, float]:
        return math.cos(self.theta), -math.sin(self.theta)

    @property
    def bright_weights(self) -> Tuple[float, float]:
        return math.sin(self.theta), math.cos(self.theta)


def collective_modes(omega: float, config: SystemConfig) -> CollectiveModes:
    """Mixing angle at ω for which only the bright mode couples to the waveguide."""
    v1 = float(coupling_profile(1, omega, config))
    v2 = float(coupling_profile(2, omega, config))
    norm = math.hypot(v1, v2)
    theta = math.atan2(v1, v2) if norm > 0 else 0.0
    return CollectiveModes(omega=omega, theta=theta, bright_coupling=norm)


def spectral_table(config: SystemConfig, omegas: np.ndarray) -> Dict[str, np.ndarray]:
    """Columns omega, J11, J22, J12 over ``omegas``."""
    density = SpectralDensityMatrix(config)
    omegas = np.asarray(omegas, dtype=float)
    return {
        "omega": omegas,
        "J11": np.asarray(density.entry(1, 1, omegas)),
        "J22": np.asarray(density.entry(2, 2, omegas)),
        "J12": np.asarray(density.entry(1, 2, omegas)),
    }


def kernel_table(config: SystemConfig, taus: np.ndarray) -> Dict[str, np.ndarray]:
    """Columns tau and Re/Im of the lab-frame g11, g22, g12."""
    taus = np.asarray(taus, dtype=float)
    table: Dict[str, np.ndarray] = {"tau": taus}
    for label, (i, j) in (("g11", (1, 1)), ("g22", (2, 2)), ("g12", (1, 2))):
        values = np.asarray(memory_kernel_bessel(i, j, taus, config))
        table[f"Re_{label}"] = values.real
        table[f"Im_{label}"] = values.imag
    return table
