"""
Photon propagating function μ(t) of the two cavities.

Three independent routes compute the same 2x2 matrix function:

* ``solve_volterra``: the exact integrodifferential equation of motion,
  stepped with a trapezoidal Volterra rule in the frame rotating at omega0;
* ``weak_coupling_propagator``: the Born-Markov closed form e^{-(γ+iω̄)t};
* ``finite_chain_oracle``: exact diagonalization of a long but finite chain.

All trajectories store rotating-frame samples μ̃(t) = e^{i ω_f t} μ(t).
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft, linalg

from ..utils.logger import get_logger
from .config import SolverConfig, get_config
from .errors import (
    ConfigurationError,
    HorizonError,
    NumericalFailureError,
    StepSizeError,
    UnsupportedConfigurationError,
)
from .model import ComplexMatrix2, Regime, SystemConfig, TimeGrid, classify, validate
from .spectral import KernelCache, lamb_shift_matrix, markovian_rates

logger = get_logger("propagator")

METHOD_VOLTERRA = "volterra"
METHOD_WEAK = "weak-coupling"
METHOD_CHAIN = "finite-chain"

METHOD_ALIASES = {
    "exact": METHOD_VOLTERRA,
    "volterra": METHOD_VOLTERRA,
    "weak": METHOD_WEAK,
    "weak-coupling": METHOD_WEAK,
    "oracle": METHOD_CHAIN,
    "finite-chain": METHOD_CHAIN,
}

# above this many steps "auto" history switches to FFT blocks
_AUTO_BLOCKED_THRESHOLD = 8192


@dataclass(frozen=True)
class PropagatorTrajectory:
    """Rotating-frame samples μ̃(t_k) on a uniform grid."""

    grid: TimeGrid
    frame_frequency: float
    samples: np.ndarray
    method: str
    config_hash: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.grid.n_steps + 1, 2, 2):
            raise ValueError(
                f"samples shape {samples.shape} does not match grid with {self.grid.n_steps} steps"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return self.samples.shape[0]

    def sample(self, k: int) -> ComplexMatrix2:
        return ComplexMatrix2(self.samples[k])

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.samples, compute_uv=False)

    @property
    def max_singular_value(self) -> float:
        return float(self.singular_values().max())

    def lab_frame(self) -> np.ndarray:
        """μ(t) = e^{-i ω_f t} μ̃(t)."""
        phases = np.exp(-1j * self.frame_frequency * self.times)
        return phases[:, None, None] * self.samples


@dataclass(frozen=True)
class MasterEquationCoefficients:
    """Time-local coefficients ω_ij(t) and γ_ij(t) of the exact master equation."""

    times: np.ndarray
    omega_ren: np.ndarray
    gamma: np.ndarray
    valid: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def omega_at(self, k: int) -> ComplexMatrix2:
        return ComplexMatrix2(self.omega_ren[k])

    def gamma_at(self, k: int) -> ComplexMatrix2:
        return ComplexMatrix2(self.gamma[k])


def _check_step_size(config: SystemConfig, dt: float, settings: SolverConfig) -> None:
    detuning = max(abs(w - config.omega0) for w in config.cavity_frequencies)
    scales = {
        "detuning": detuning,
        "xi0": config.xi0,
        "xi1": config.xi1,
        "xi2": config.xi2,
    }
    binding = max(scales, key=lambda name: scales[name])
    if dt * scales[binding] >= settings.step_scale_limit:
        raise StepSizeError(binding, scales[binding], dt, settings.step_scale_limit)


class _History:
    """Σ_{k=a}^{q-1} K[q-k] Y[k] for the trapezoidal rule.

    ``direct`` evaluates the whole sum with one matrix product per step.
    ``blocked`` splits it at the start of each block: the part over samples
    before the block is a convolution done once per block with FFTs, the part
    inside the block is summed directly.
    """

    def __init__(self, kernel: np.ndarray, samples: np.ndarray, mode: str, block: int):
        self.kernel = kernel
        self.samples = samples
        self.mode = mode
        self.block = max(int(block), 1)
        self.n = kernel.shape[0] - 1
        # Kr[:, m, :] = K[N - m] with the row index first, so slices reshape into BLAS products
        self.reversed_kernel = np.ascontiguousarray(kernel[::-1].transpose(1, 0, 2))
        self._block_start = 0
        self._block_end = 0
        self._far: Optional[np.ndarray] = None

    def _partial(self, q: int, start: int) -> np.ndarray:
        count = q - start
        if count <= 0:
            return np.zeros((2, 2), dtype=complex)
        lhs = self.reversed_kernel[:, self.n - count : self.n, :].reshape(2, 2 * count)
        rhs = self.samples[start:q].reshape(2 * count, 2)
        return lhs @ rhs

    def _refresh_far(self, q0: int) -> None:
        self._block_start = q0
        self._block_end = min(q0 + self.block, self.n + 1)
        count = q0 - 1
        if count <= 0:
            self._far = None
            return
        span = self._block_end - 1
        size = fft.next_fast_len(count + span)
        kernel_hat = fft.fft(self.kernel[:span], n=size, axis=0)
        sample_hat = fft.fft(self.samples[1:q0], n=size, axis=0)
        self._far = fft.ifft(np.einsum("pij,pjl->pil", kernel_hat, sample_hat), axis=0)

    def __call__(self, q: int) -> np.ndarray:
        """L_q = Σ_{k=1}^{q-1} K[q-k] Y[k]; all Y[k] with k < q must be final."""
        if self.mode == "direct":
            return self._partial(q, 1)
        if q >= self._block_end or q < self._block_start:
            self._refresh_far(q)
        near = self._partial(q, max(self._block_start, 1))
        if self._far is None:
            return near
        return self._far[q - 1] + near


def solve_volterra(
    config: SystemConfig,
    grid: TimeGrid,
    tolerance: Optional[float] = None,
    settings: Optional[SolverConfig] = None,
    resume: Optional[PropagatorTrajectory] = None,
    kernel: Optional[KernelCache] = None,
) -> PropagatorTrajectory:
    """Integrate dμ̃/dt = -i(ω̄ - ω_f)μ̃ - ∫₀ᵗ g̃(t-τ)μ̃(τ)dτ with ω_f = omega0.

    The detuning is diagonal, so its propagator e^{-iΩ dt} is applied exactly
    and only the memory integral is treated with the trapezoidal rule. Each
    step predicts from the explicit part and then runs corrector sweeps for
    the implicit K(0) term until the update drops below ``tolerance``.
    """
    settings = settings or get_config().solver
    tolerance = settings.corrector_tolerance if tolerance is None else tolerance
    validate(config, grid).raise_for_issues()
    dt, n_steps = grid.dt, grid.n_steps
    _check_step_size(config, dt, settings)

    omega_f = config.omega0
    detuning = np.array(config.cavity_frequencies) - omega_f
    rotation = np.exp(-1j * detuning * dt)[:, None]

    started = time.perf_counter()
    cache = kernel if kernel is not None and kernel.n_steps >= n_steps else KernelCache.build(
        config, dt, n_steps, settings
    )
    K = np.ascontiguousarray(cache.values[: n_steps + 1])

    mode = settings.history_mode
    if mode == "auto":
        mode = "blocked" if n_steps > _AUTO_BLOCKED_THRESHOLD else "direct"

    Y = np.zeros((n_steps + 1, 2, 2), dtype=complex)
    Y[0] = np.eye(2)
    first = 0
    if resume is not None:
        first = _load_resume(resume, config, grid, Y)

    history = _History(K, Y, mode, settings.history_block)
    half = 0.5 * dt
    implicit = 0.25 * dt * dt * K[0]

    # M_n: trapezoidal approximation of ∫₀^{t_n} K(t_n-τ)Y(τ)dτ
    if first == 0:
        memory = np.zeros((2, 2), dtype=complex)
    else:
        memory = dt * (0.5 * K[first] @ Y[0] + history(first) + 0.5 * K[0] @ Y[first])

    max_sweeps_used = 0
    for n in range(first, n_steps):
        q = n + 1
        explicit = dt * (0.5 * K[q] @ Y[0] + history(q))
        base = rotation * Y[n] - half * (rotation * memory + explicit)

        y = base - implicit @ (rotation * Y[n])
        for sweep in range(1, settings.max_corrector_sweeps + 1):
            updated = base - implicit @ y
            change = np.max(np.abs(updated - y))
            y = updated
            if change < tolerance:
                break
        else:
            raise NumericalFailureError(
                f"corrector did not converge at step {q} (change {change:.3g})", n
            )
        max_sweeps_used = max(max_sweeps_used, sweep)

        if not np.all(np.isfinite(y)):
            raise NumericalFailureError("non-finite propagator sample", n)
        Y[q] = y
        memory = explicit + half * K[0] @ y

    trajectory = PropagatorTrajectory(
        grid=grid,
        frame_frequency=omega_f,
        samples=Y,
        method=METHOD_VOLTERRA,
        config_hash=config.config_hash(),
    )
    _report_passivity(trajectory, settings, loose=True)
    logger.debug(
        f"Volterra solve: {n_steps} steps, history={mode}, max sweeps {max_sweeps_used}, "
        f"{time.perf_counter() - started:.2f}s"
    )
    return trajectory


def _load_resume(
    resume: PropagatorTrajectory, config: SystemConfig, grid: TimeGrid, Y: np.ndarray
) -> int:
    if resume.method != METHOD_VOLTERRA:
        raise ConfigurationError(f"can only resume a Volterra trajectory, got {resume.method}")
    if resume.config_hash and resume.config_hash != config.config_hash():
        raise ConfigurationError("resume trajectory belongs to a different configuration")
    if not math.isclose(resume.grid.dt, grid.dt, rel_tol=1e-12) or resume.grid.t0 != grid.t0:
        raise ConfigurationError("resume trajectory uses a different time step")
    done = min(resume.grid.n_steps, grid.n_steps)
    Y[: done + 1] = resume.samples[: done + 1]
    logger.info(f"Resuming Volterra solve at step {done} of {grid.n_steps}")
    return done


def _report_passivity(trajectory: PropagatorTrajectory, settings: SolverConfig, loose: bool = False) -> None:
    largest = trajectory.max_singular_value
    if largest > 1.0 + settings.passivity_tolerance:
        log = logger.debug if loose and largest <= 1.0 + 1e-3 else logger.warning
        log(f"{trajectory.method} propagator exceeds passivity bound: max singular value {largest:.12f}")


def _exp_minus(generator: np.ndarray, times: np.ndarray) -> np.ndarray:
    """e^{-A t} for a constant 2x2 matrix A via its two eigenvalues."""
    m = 0.5 * np.trace(generator)
    shifted = generator - m * np.eye(2)
    # q² = m² - det A, formed from the traceless part to avoid cancellation
    q = np.sqrt(shifted[0, 0] ** 2 + shifted[0, 1] * shifted[1, 0] + 0j)
    decay = np.exp(-m * times)[:, None, None]
    scale = max(np.max(np.abs(generator)), 1e-300)

    if abs(q) <= 1e-12 * scale:
        # nilpotent remainder: (A - m)^2 = q^2 = 0
        return decay * (np.eye(2)[None] - times[:, None, None] * shifted[None])

    # spectral projectors onto the eigenvalues m + q and m - q
    plus = (shifted + q * np.eye(2)) / (2.0 * q)
    minus = (q * np.eye(2) - shifted) / (2.0 * q)
    return (
        np.exp(-(m + q) * times)[:, None, None] * plus[None]
        + np.exp(-(m - q) * times)[:, None, None] * minus[None]
    )


def weak_coupling_propagator(
    config: SystemConfig, grid: TimeGrid, omega_c: Optional[float] = None
) -> PropagatorTrajectory:
    """Born-Markov propagator e^{-(γ + iω̄)t} with γ = J(ω_c)/2 and ω̄ = ω_c - δω.

    At the band centre with both sites odd the Lamb shift vanishes and the
    damping matrix has rank one; then the three-entry resonant form is used.
    """
    w1, w2 = config.cavity_frequencies
    if not math.isclose(w1, w2, rel_tol=0.0, abs_tol=1e-14):
        raise UnsupportedConfigurationError(
            f"weak-coupling form needs equal cavity frequencies, got {w1:g} and {w2:g}"
        )
    omega_c = w1 if omega_c is None else omega_c
    times = grid.times
    omega_f = config.omega0
    gamma = markovian_rates(omega_c, config).as_array().real

    resonant = (
        classify(omega_c, config.omega0, config.xi0) is Regime.RESONANT
        and config.n1 % 2 == 1
        and config.n2 % 2 == 1
    )
    if resonant:
        samples = _resonant_propagator(gamma, times)
        samples *= np.exp(-1j * (omega_c - omega_f) * times)[:, None, None]
    else:
        shift = lamb_shift_matrix(omega_c, config)
        # rotating frame: subtract ω_f from the frequency matrix
        generator = gamma + 1j * ((omega_c - omega_f) * np.eye(2) - shift)
        samples = _exp_minus(generator, times)

    trajectory = PropagatorTrajectory(
        grid=grid,
        frame_frequency=omega_f,
        samples=samples,
        method=METHOD_WEAK,
        config_hash=config.config_hash(),
    )
    _report_passivity(trajectory, get_config().solver)
    return trajectory


def _resonant_propagator(gamma: np.ndarray, times: np.ndarray) -> np.ndarray:
    g11, g22, g12 = gamma[0, 0], gamma[1, 1], gamma[0, 1]
    total = g11 + g22
    samples = np.empty((times.size, 2, 2), dtype=complex)
    if total <= 0.0:
        samples[:] = np.eye(2)
        return samples
    decay = np.exp(-total * times)
    samples[:, 0, 0] = (g22 + g11 * decay) / total
    samples[:, 1, 1] = (g11 + g22 * decay) / total
    samples[:, 0, 1] = -g12 * (1.0 - decay) / total
    samples[:, 1, 0] = samples[:, 0, 1]
    return samples


def chain_hamiltonian(config: SystemConfig, chain_length: int, frame_frequency: float = 0.0) -> np.ndarray:
    """Single-excitation Hamiltonian: cavities at indices 0, 1; waveguide site m at 1 + m."""
    size = chain_length + 2
    H = np.zeros((size, size))
    H[0, 0], H[1, 1] = config.cavity_frequencies
    H[2:, 2:] += np.diag(np.full(chain_length, config.omega0))
    hop = np.arange(2, size - 1)
    H[hop, hop + 1] = H[hop + 1, hop] = -config.xi0
    for cavity, (site, coupling) in enumerate(zip(config.sites, config.couplings)):
        H[cavity, 1 + site] = H[1 + site, cavity] = coupling
    H -= frame_frequency * np.eye(size)
    return H


def finite_chain_oracle(
    config: SystemConfig,
    grid: TimeGrid,
    chain_length: Optional[int] = None,
    settings: Optional[SolverConfig] = None,
) -> PropagatorTrajectory:
    """Cavity block of e^{-iHt} for a chain of ``chain_length`` resonators."""
    settings = settings or get_config().solver
    chain_length = settings.chain_length if chain_length is None else chain_length
    validate(config, grid).raise_for_issues()

    if chain_length < 4 * max(config.sites):
        raise ConfigurationError(
            f"chain of {chain_length} sites is too short for cavity sites {config.sites}; "
            f"need at least {4 * max(config.sites)}"
        )
    horizon = settings.horizon_guard * chain_length / (2.0 * config.xi0)
    if grid.t_max >= horizon:
        raise HorizonError(grid.t_max, horizon)

    omega_f = config.omega0
    energies, vectors = linalg.eigh(chain_hamiltonian(config, chain_length, omega_f))
    cavity = vectors[:2]

    times = grid.times
    samples = np.empty((times.size, 2, 2), dtype=complex)
    chunk = max(1, 2_000_000 // energies.size)
    for start in range(0, times.size, chunk):
        phases = np.exp(-1j * np.outer(times[start : start + chunk], energies))
        samples[start : start + chunk] = np.einsum("im,tm,jm->tij", cavity, phases, cavity.conj())

    logger.debug(f"Finite chain oracle: N={chain_length}, horizon {horizon:g}")
    return PropagatorTrajectory(
        grid=grid,
        frame_frequency=omega_f,
        samples=samples,
        method=METHOD_CHAIN,
        config_hash=config.config_hash(),
    )


def master_equation_coefficients(
    traj: PropagatorTrajectory, singular_floor: Optional[float] = None
) -> MasterEquationCoefficients:
    """ω(t) = (i/2)(μ̇μ⁻¹ - h.c.) and γ(t) = -(1/2)(μ̇μ⁻¹ + h.c.) in the lab frame.

    Samples whose smallest singular value is at or below ``singular_floor`` are
    returned as NaN and flagged in ``valid``.
    """
    floor = get_config().analysis.singular_floor if singular_floor is None else singular_floor
    samples = traj.samples
    derivative = np.gradient(samples, traj.grid.dt, axis=0, edge_order=2)

    smallest = np.linalg.svd(samples, compute_uv=False)[:, -1]
    valid = smallest > floor

    generator = np.full_like(samples, np.nan)
    if np.any(valid):
        generator[valid] = derivative[valid] @ np.linalg.inv(samples[valid])
    adjoint = np.conj(np.swapaxes(generator, -1, -2))

    # -iω_f from the frame rotation is anti-Hermitian: it only shifts ω
    omega = 0.5j * (generator - adjoint) + traj.frame_frequency * np.eye(2)
    gamma = -0.5 * (generator + adjoint)

    if not np.all(valid):
        logger.debug(f"{int(np.count_nonzero(~valid))} near-singular samples skipped")
    return MasterEquationCoefficients(times=traj.times, omega_ren=omega, gamma=gamma, valid=valid)


def solve(
    config: SystemConfig,
    grid: TimeGrid,
    method: str = "exact",
    settings: Optional[SolverConfig] = None,
) -> PropagatorTrajectory:
    """Dispatch to one of the propagator routes by name."""
    try:
        canonical = METHOD_ALIASES[method]
    except KeyError:
        raise ConfigurationError(
            f"Unknown method {method!r}; choose from {sorted(METHOD_ALIASES)}"
        ) from None
    if canonical == METHOD_VOLTERRA:
        return solve_volterra(config, grid, settings=settings)
    if canonical == METHOD_WEAK:
        return weak_coupling_propagator(config, grid)
    return finite_chain_oracle(config, grid, settings=settings)
