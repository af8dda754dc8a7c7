"""
Second-order moments, Gaussian covariance matrices and entanglement measures.

Moments are n_ij = <a_i† a_j> and s_ij = <a_i a_j>; first moments vanish for
the squeezed-vacuum inputs. Quadratures are X = (a + a†)/√2 and
Y = (a - a†)/(i√2), so the vacuum covariance is I/2.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.logger import get_logger
from .config import AnalysisConfig, get_config
from .errors import PhysicalityError, UnsupportedConfigurationError
from .model import ComplexMatrix2, Regime, SystemConfig, classify
from .propagator import PropagatorTrajectory
from .spectral import lamb_shift_matrix, markovian_rates

logger = get_logger("moments")

PHYSICALITY_TOLERANCE = 1e-9
RADICAND_TOLERANCE = 1e-12

# two-mode symplectic form over (X1, Y1, X2, Y2)
SYMPLECTIC_FORM = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class MomentState:
    """n (Hermitian) and s (symmetric) at one instant."""

    n: ComplexMatrix2
    s: ComplexMatrix2

    def __post_init__(self) -> None:
        if not self.n.is_hermitian(1e-9):
            raise ValueError("n must be Hermitian")
        if not self.s.is_symmetric(1e-9):
            raise ValueError("s must be symmetric")


@dataclass(frozen=True)
class MomentSeries:
    """Moments stacked along a time axis: ``n`` and ``s`` have shape (T, 2, 2)."""

    times: np.ndarray
    n: np.ndarray
    s: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, k: int) -> MomentState:
        return MomentState(ComplexMatrix2(self.n[k]), ComplexMatrix2(self.s[k]))

    def __iter__(self) -> Iterator[MomentState]:
        for k in range(len(self)):
            yield self[k]


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real symmetric 4x4 χ over (X1, Y1, X2, Y2)."""

    data: np.ndarray

    @property
    def rho1(self) -> np.ndarray:
        return self.data[:2, :2]

    @property
    def rho2(self) -> np.ndarray:
        return self.data[2:, 2:]

    @property
    def rho3(self) -> np.ndarray:
        return self.data[:2, 2:]

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.data))

    def uncertainty_margin(self) -> float:
        """Smallest eigenvalue of χ + (i/2)Ω; non-negative for physical states."""
        return float(np.linalg.eigvalsh(self.data + 0.5j * SYMPLECTIC_FORM).min())

    def is_physical(self, tolerance: float = PHYSICALITY_TOLERANCE) -> bool:
        return self.uncertainty_margin() >= -tolerance


@dataclass(frozen=True)
class EntanglementRecord:
    t: float
    E_N: float
    purity: float
    n11: float
    n22: float
    lambda_: float
    s11: complex = 0j
    s22: complex = 0j
    s12: complex = 0j
    n12: complex = 0j


def initial_moments(r1: float, r2: float) -> MomentState:
    """Product of single-mode squeezed vacua with squeezing r1, r2."""
    sinh = np.sinh([r1, r2])
    cosh = np.cosh([r1, r2])
    return MomentState(
        n=ComplexMatrix2(np.diag(sinh ** 2)),
        s=ComplexMatrix2(np.diag(sinh * cosh)),
    )


def evolve_moments(traj: PropagatorTrajectory, m0: MomentState, frame: str = "rotating") -> MomentSeries:
    """n(t) = μ* n(0) μᵀ, s(t) = μ s(0) μᵀ for every sample of ``traj``.

    With a_i(t) = Σ_j μ_ij a_j(0), n_ij = <a_i† a_j> picks up the conjugate on the left.
    """
    mu = traj.samples if frame == "rotating" else traj.lab_frame()
    n0 = m0.n.as_array()
    s0 = m0.s.as_array()
    mu_t = np.swapaxes(mu, -1, -2)
    n = np.conj(mu) @ n0 @ mu_t
    s = mu @ s0 @ mu_t
    # remove round-off asymmetry
    n = 0.5 * (n + np.conj(np.swapaxes(n, -1, -2)))
    s = 0.5 * (s + np.swapaxes(s, -1, -2))
    return MomentSeries(times=traj.times, n=n, s=s)


def covariance_arrays(n: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Vectorized χ for moment stacks of shape (..., 2, 2)."""
    shape = n.shape[:-2]
    chi = np.zeros(shape + (4, 4))
    for i in range(2):
        a = 2 * i
        n_ii = n[..., i, i].real
        chi[..., a, a] = 0.5 + n_ii + s[..., i, i].real
        chi[..., a + 1, a + 1] = 0.5 + n_ii - s[..., i, i].real
        chi[..., a, a + 1] = chi[..., a + 1, a] = s[..., i, i].imag

    s12, n12 = s[..., 0, 1], n[..., 0, 1]
    block = np.empty(shape + (2, 2))
    block[..., 0, 0] = s12.real + n12.real
    block[..., 0, 1] = s12.imag + n12.imag
    block[..., 1, 0] = s12.imag - n12.imag
    block[..., 1, 1] = -s12.real + n12.real
    chi[..., :2, 2:] = block
    chi[..., 2:, :2] = np.swapaxes(block, -1, -2)
    return chi


def covariance_from_moments(m: MomentState) -> CovarianceMatrix:
    chi = CovarianceMatrix(covariance_arrays(m.n.as_array(), m.s.as_array()))
    margin = chi.uncertainty_margin()
    if margin < -PHYSICALITY_TOLERANCE:
        raise PhysicalityError(f"covariance violates the uncertainty relation (margin {margin:.3g})")
    return chi


def _negativity_arrays(chi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """λ and E_N for stacks of covariance matrices."""
    det1 = np.linalg.det(chi[..., :2, :2])
    det2 = np.linalg.det(chi[..., 2:, 2:])
    det3 = np.linalg.det(chi[..., :2, 2:])
    total = np.linalg.det(chi)
    delta = det1 + det2 - 2.0 * det3

    outer = delta ** 2 - 4.0 * total
    if np.any(outer < -RADICAND_TOLERANCE):
        raise PhysicalityError(f"negative radicand {outer.min():.3g} in symplectic eigenvalue")
    inner = 0.5 * (delta - np.sqrt(np.clip(outer, 0.0, None)))
    if np.any(inner < -RADICAND_TOLERANCE):
        raise PhysicalityError(f"negative radicand {inner.min():.3g} in symplectic eigenvalue")
    lam = np.sqrt(np.clip(inner, 0.0, None))
    with np.errstate(divide="ignore"):
        negativity = np.maximum(0.0, -np.log(2.0 * lam))
    return lam, negativity


def logarithmic_negativity(chi: CovarianceMatrix) -> Tuple[float, float]:
    """(E_N, λ) with λ the smallest symplectic eigenvalue of the partial transpose.

    The state is entangled iff λ < 1/2.
    """
    lam, negativity = _negativity_arrays(chi.data)
    return float(negativity), float(lam)


def symplectic_eigenvalues(chi: CovarianceMatrix) -> Tuple[float, float]:
    """(ν₋, ν₊) of χ itself; both are ≥ 1/2 for physical states."""
    data = chi.data
    delta = np.linalg.det(data[:2, :2]) + np.linalg.det(data[2:, 2:]) + 2.0 * np.linalg.det(data[:2, 2:])
    root = math.sqrt(max(delta ** 2 - 4.0 * chi.determinant, 0.0))
    return math.sqrt(max(0.5 * (delta - root), 0.0)), math.sqrt(0.5 * (delta + root))


def purity(chi: CovarianceMatrix) -> float:
    """Tr ρ² = 1/(4 √Det χ)."""
    det = chi.determinant
    if det < 1.0 / 16.0 - PHYSICALITY_TOLERANCE:
        raise PhysicalityError(f"Det χ = {det:.6g} below the pure-state bound 1/16")
    return 1.0 / (4.0 * math.sqrt(det))


def purity_from_moments(m: MomentState) -> float:
    """Purity as Π_k 1/(2ν_k) over the symplectic spectrum."""
    nu_minus, nu_plus = symplectic_eigenvalues(
        CovarianceMatrix(covariance_arrays(m.n.as_array(), m.s.as_array()))
    )
    return 1.0 / (4.0 * nu_minus * nu_plus)


def entanglement_records(series: MomentSeries, check_physicality: bool = True) -> List[EntanglementRecord]:
    """One EntanglementRecord per sample of ``series``."""
    chi = covariance_arrays(series.n, series.s)
    lam, negativity = _negativity_arrays(chi)
    purities = 1.0 / (4.0 * np.sqrt(np.clip(np.linalg.det(chi), 1e-300, None)))

    if check_physicality:
        margins = np.linalg.eigvalsh(chi + 0.5j * SYMPLECTIC_FORM).min(axis=-1)
        worst = int(np.argmin(margins))
        if margins[worst] < -PHYSICALITY_TOLERANCE:
            logger.warning(
                f"uncertainty relation violated by {-margins[worst]:.3g} at t={series.times[worst]:g}"
            )

    return [
        EntanglementRecord(
            t=float(series.times[k]),
            E_N=float(negativity[k]),
            purity=float(purities[k]),
            n11=float(series.n[k, 0, 0].real),
            n22=float(series.n[k, 1, 1].real),
            lambda_=float(lam[k]),
            s11=complex(series.s[k, 0, 0]),
            s22=complex(series.s[k, 1, 1]),
            s12=complex(series.s[k, 0, 1]),
            n12=complex(series.n[k, 0, 1]),
        )
        for k in range(len(series))
    ]


def steady_state_moments(config: SystemConfig, r: float, t: Optional[float] = None) -> MomentState:
    """Long-time moments at the band centre for equal squeezing r.

    Without ``t`` the values are those of the frame rotating at omega_c;
    otherwise s carries the lab-frame phase e^{-2i omega_c t}.
    """
    omega_c = config.omega_c1
    if any(classify(w, config.omega0, config.xi0) is not Regime.RESONANT for w in config.cavity_frequencies):
        raise UnsupportedConfigurationError("steady state requires both cavities at the band centre")
    if config.n1 % 2 == 0 and config.n2 % 2 == 0:
        raise UnsupportedConfigurationError("steady state requires at least one odd site")

    gamma = markovian_rates(omega_c, config).as_array().real
    total = gamma[0, 0] + gamma[1, 1]
    if total <= 0.0:
        raise UnsupportedConfigurationError("steady state requires nonzero damping")

    sinh2 = math.sinh(r) ** 2
    sc = math.sinh(r) * math.cosh(r)
    # μ(∞) in the frame rotating at omega_c, a projector onto the dark mode
    dark = np.array([[gamma[1, 1], -gamma[0, 1]], [-gamma[0, 1], gamma[0, 0]]]) / total
    phase = 1.0 if t is None else np.exp(-2j * omega_c * t)
    return MomentState(n=ComplexMatrix2(sinh2 * dark), s=ComplexMatrix2(sc * phase * dark))


def beam_splitter_moments(config: SystemConfig, r: float, times: np.ndarray) -> MomentSeries:
    """Moments of the out-of-band effective beam splitter, frame rotating at omega0.

    Uses the mean diagonal Lamb shift for both cavities, so it is exact only
    when δω11 = δω22.
    """
    omega_c = config.omega_c1
    if classify(omega_c, config.omega0, config.xi0) is not Regime.OUT_OF_BAND:
        raise UnsupportedConfigurationError("beam-splitter form applies outside the band only")
    shift = lamb_shift_matrix(omega_c, config)
    detuning = omega_c - 0.5 * (shift[0, 0] + shift[1, 1]) - config.omega0
    coupling = -shift[0, 1]

    times = np.asarray(times, dtype=float)
    cos = np.cos(coupling * times)
    sin = np.sin(coupling * times)
    mu = np.empty((times.size, 2, 2), dtype=complex)
    mu[:, 0, 0] = mu[:, 1, 1] = cos
    mu[:, 0, 1] = mu[:, 1, 0] = -1j * sin
    mu *= np.exp(-1j * detuning * times)[:, None, None]

    sinh2 = math.sinh(r) ** 2
    sc = math.sinh(r) * math.cosh(r)
    mu_t = np.swapaxes(mu, -1, -2)
    n = sinh2 * np.conj(mu) @ mu_t
    s = sc * mu @ mu_t
    return MomentSeries(times=times, n=n, s=s)


def detect_esd_esb(
    records: Sequence[EntanglementRecord], threshold: Optional[float] = None
) -> List[Tuple[float, float]]:
    """Maximal runs of samples with E_N ≤ threshold that have entangled samples on both sides."""
    if threshold is None:
        threshold = get_config().analysis.esd_threshold
    intervals: List[Tuple[float, float]] = []
    run_start: Optional[int] = None
    seen_entangled = False

    for k, record in enumerate(records):
        if record.E_N > threshold:
            if run_start is not None and seen_entangled:
                intervals.append((records[run_start].t, records[k - 1].t))
            run_start = None
            seen_entangled = True
        elif run_start is None:
            run_start = k
    return intervals


def detect_steady_state(
    series: MomentSeries, window: float, rtol: Optional[float] = None
) -> Optional[int]:
    """First index after which every moment stays within ``rtol`` of its final value.

    Returns None unless that stretch lasts at least ``window`` time units.
    """
    rtol = get_config().analysis.steady_rtol if rtol is None else rtol
    features = np.concatenate([series.n.reshape(len(series), -1), series.s.reshape(len(series), -1)], axis=1)
    final = features[-1]
    scale = max(float(np.max(np.abs(final))), 1e-12)
    deviation = np.max(np.abs(features - final), axis=1) / scale
    unsettled = np.nonzero(deviation > rtol)[0]
    start = 0 if unsettled.size == 0 else int(unsettled[-1]) + 1
    if start >= len(series) or series.times[-1] - series.times[start] < window:
        return None
    return start


def steady_window(config: SystemConfig, analysis: Optional[AnalysisConfig] = None) -> Optional[float]:
    """Detection window steady_window_rates / γ_max; None when nothing decays."""
    analysis = analysis or get_config().analysis
    rates = np.linalg.eigvalsh(markovian_rates(config.omega_c1, config).as_array())
    largest = float(np.max(rates.real))
    if largest <= 0.0:
        return None
    return analysis.steady_window_rates / largest


def summarize(
    records: Sequence[EntanglementRecord],
    series: MomentSeries,
    config: SystemConfig,
    analysis: Optional[AnalysisConfig] = None,
) -> Dict[str, Any]:
    """Machine-readable summary of one entanglement trajectory."""
    analysis = analysis or get_config().analysis
    negativity = np.array([record.E_N for record in records])
    peak = int(np.argmax(negativity))
    last = records[-1]

    steady: Optional[Dict[str, float]] = None
    window = steady_window(config, analysis)
    if window is not None:
        index = detect_steady_state(series, window, analysis.steady_rtol)
        if index is not None:
            steady = {
                "t": records[index].t,
                "E_N": last.E_N,
                "purity": last.purity,
                "n11": last.n11,
                "n22": last.n22,
            }

    return {
        "regimes": [regime.value for regime in config.regimes],
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "E_N_max": float(negativity[peak]),
        "t_at_max": records[peak].t,
        "purity_at_max": records[peak].purity,
        "final": {"t": last.t, "E_N": last.E_N, "purity": last.purity, "n11": last.n11, "n22": last.n22},
        "steady": steady,
        "esd_esb": [list(interval) for interval in detect_esd_esb(records, analysis.esd_threshold)],
    }
