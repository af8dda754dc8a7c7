"""
Tests for the propagator routes: Volterra solver, weak-coupling closed form,
finite-chain oracle and the time-local master-equation coefficients.
"""

import numpy as np
import pytest
from scipy import linalg

from crow_entangle.core.config import SolverConfig
from crow_entangle.core.errors import (
    ConfigurationError,
    HorizonError,
    StepSizeError,
    UnsupportedConfigurationError,
)
from crow_entangle.core.model import TimeGrid
from crow_entangle.core.propagator import (
    METHOD_CHAIN,
    METHOD_VOLTERRA,
    METHOD_WEAK,
    PropagatorTrajectory,
    chain_hamiltonian,
    finite_chain_oracle,
    master_equation_coefficients,
    solve,
    solve_volterra,
    weak_coupling_propagator,
)
from crow_entangle.core.spectral import collective_modes, lamb_shift_matrix, markovian_rates


# ============================================================================
# BASIC PROPERTIES
# ============================================================================

@pytest.mark.parametrize("method", ["exact", "weak", "oracle"])
def test_every_route_starts_at_identity(make_config, method):
    traj = solve(make_config(eta=0.2), TimeGrid(dt=0.5, n_steps=20), method)
    assert np.allclose(traj.samples[0], np.eye(2), atol=1e-14)
    assert traj.samples.shape == (21, 2, 2)


def test_method_names_are_canonical(make_config, short_grid):
    config = make_config(eta=0.2)
    assert solve(config, short_grid, "volterra").method == METHOD_VOLTERRA
    assert solve(config, short_grid, "weak-coupling").method == METHOD_WEAK
    assert solve(config, short_grid, "finite-chain").method == METHOD_CHAIN


def test_unknown_method_is_a_configuration_error(make_config, short_grid):
    with pytest.raises(ConfigurationError):
        solve(make_config(), short_grid, "euler")


def test_trajectory_samples_are_read_only(make_config, short_grid):
    traj = solve(make_config(eta=0.2), short_grid)
    with pytest.raises(ValueError):
        traj.samples[0, 0, 0] = 2.0


def test_trajectory_rejects_mismatched_shape(short_grid):
    with pytest.raises(ValueError):
        PropagatorTrajectory(grid=short_grid, frame_frequency=1.0, samples=np.zeros((3, 2, 2)), method="x")


def test_lab_frame_restores_carrier(make_config, short_grid):
    traj = solve(make_config(eta=0.2), short_grid)
    lab = traj.lab_frame()
    phase = np.exp(-1j * traj.times[-1])
    assert np.allclose(lab[-1], phase * traj.samples[-1])


@pytest.mark.parametrize("method", ["exact", "oracle"])
def test_decoupled_cavities_only_rotate(make_config, method):
    config = make_config(xi1=0.0, xi2=0.0, omega_c1=1.0, omega_c2=1.02)
    traj = solve(config, TimeGrid(dt=0.5, n_steps=200), method)
    expected = np.exp(-1j * np.array([0.0, 0.02])[None, :] * traj.times[:, None])
    assert np.allclose(traj.samples[:, 0, 0], expected[:, 0], atol=1e-12)
    assert np.allclose(traj.samples[:, 1, 1], expected[:, 1], atol=1e-12)
    assert np.allclose(traj.samples[:, 0, 1], 0.0, atol=1e-12)


def test_chain_hamiltonian_layout(make_config):
    config = make_config(eta=0.2, n2=3)
    H = chain_hamiltonian(config, 12)
    assert H.shape == (14, 14)
    assert np.allclose(H, H.T)
    assert H[0, 2] == pytest.approx(0.01)
    assert H[1, 4] == pytest.approx(0.01)
    assert H[2, 3] == pytest.approx(-0.05)
    assert H[5, 5] == pytest.approx(1.0)


# ============================================================================
# GUARDS
# ============================================================================

def test_coarse_step_is_rejected(make_config):
    with pytest.raises(StepSizeError) as excinfo:
        solve_volterra(make_config(eta=0.2), TimeGrid(dt=3.0, n_steps=10))
    assert excinfo.value.binding_scale == "xi0"
    assert excinfo.value.exit_code == 2


def test_step_guard_sees_detuning(make_config):
    with pytest.raises(StepSizeError) as excinfo:
        solve_volterra(make_config(eta=0.2, omega_c=1.3), TimeGrid(dt=0.5, n_steps=10))
    assert excinfo.value.binding_scale == "detuning"


def test_oracle_beyond_horizon_is_rejected(make_config):
    settings = SolverConfig(chain_length=400)
    with pytest.raises(HorizonError):
        finite_chain_oracle(make_config(eta=0.2), TimeGrid(dt=10.0, n_steps=400), settings=settings)


def test_oracle_chain_must_be_long_enough(make_config, short_grid):
    with pytest.raises(ConfigurationError):
        finite_chain_oracle(make_config(eta=0.2, n2=5), short_grid, chain_length=10)


def test_weak_coupling_needs_equal_frequencies(make_config, short_grid):
    with pytest.raises(UnsupportedConfigurationError):
        weak_coupling_propagator(make_config(omega_c1=1.0, omega_c2=1.02), short_grid)


def test_invalid_configuration_is_rejected_before_solving(make_config, short_grid):
    with pytest.raises(ConfigurationError):
        solve_volterra(make_config(n1=5, n2=5), short_grid)


# ============================================================================
# WEAK-COUPLING CLOSED FORM
# ============================================================================

def test_weak_coupling_resonant_limit_is_dark_projector(make_config):
    traj = weak_coupling_propagator(make_config(eta=0.08), TimeGrid(dt=1000.0, n_steps=200))
    assert np.allclose(traj.samples[-1], 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-12)


def test_weak_coupling_preserves_dark_mode(make_config):
    config = make_config(eta=0.08)
    dark = np.array(collective_modes(1.0, config).dark_weights)
    traj = weak_coupling_propagator(config, TimeGrid(dt=50.0, n_steps=100))
    assert np.allclose(traj.samples @ dark, dark[None, :], atol=1e-12)


def test_weak_coupling_out_of_band_is_unitary_exponential(out_of_band_config):
    grid = TimeGrid(dt=5.0, n_steps=100)
    traj = weak_coupling_propagator(out_of_band_config, grid)
    generator = 0.2 * np.eye(2) - lamb_shift_matrix(1.2, out_of_band_config)
    for k in (0, 17, 100):
        expected = linalg.expm(-1j * generator * grid.times[k])
        assert np.allclose(traj.samples[k], expected, atol=1e-9)
    products = np.conj(np.swapaxes(traj.samples, -1, -2)) @ traj.samples
    assert np.allclose(products, np.eye(2)[None], atol=1e-9)


def test_weak_coupling_in_band_decays(in_band_config):
    traj = weak_coupling_propagator(in_band_config, TimeGrid(dt=100.0, n_steps=400))
    assert traj.max_singular_value <= 1.0 + 1e-12
    # the bright mode is gone; the dark mode only leaks through the Lamb shift
    assert traj.singular_values()[-1].min() < 1e-3


# ============================================================================
# EXACT SOLVER AGAINST THE ORACLE AND THE WEAK-COUPLING LIMIT
# ============================================================================

@pytest.mark.slow
def test_volterra_matches_oracle_at_resonance(resonant_config):
    grid = TimeGrid.from_tmax(1000.0, 0.2)
    exact = solve_volterra(resonant_config, grid)
    oracle = finite_chain_oracle(resonant_config, grid)
    assert np.max(np.abs(exact.samples - oracle.samples)) < 1e-4


@pytest.mark.slow
def test_volterra_matches_oracle_in_band(in_band_config):
    grid = TimeGrid.from_tmax(400.0, 0.1)
    exact = solve_volterra(in_band_config, grid)
    oracle = finite_chain_oracle(in_band_config, grid)
    assert np.max(np.abs(exact.samples - oracle.samples)) < 1e-4


@pytest.mark.slow
def test_volterra_matches_oracle_out_of_band(out_of_band_config):
    grid = TimeGrid.from_tmax(1000.0, 0.125)
    exact = solve_volterra(out_of_band_config, grid)
    oracle = finite_chain_oracle(out_of_band_config, grid)
    assert np.max(np.abs(exact.samples - oracle.samples)) < 1e-4


def test_volterra_matches_oracle_on_short_grid(make_config):
    config = make_config(eta=0.4, n2=3, omega_c=1.02)
    grid = TimeGrid.from_tmax(100.0, 0.1)
    exact = solve_volterra(config, grid)
    oracle = finite_chain_oracle(config, grid, chain_length=100)
    assert np.max(np.abs(exact.samples - oracle.samples)) < 1e-4


@pytest.mark.slow
def test_volterra_approaches_weak_coupling_for_small_eta(make_config):
    config = make_config(eta=0.02)
    grid = TimeGrid.from_tmax(20000.0, 1.5)
    exact = solve_volterra(config, grid)
    weak = weak_coupling_propagator(config, grid)
    assert np.max(np.abs(exact.samples - weak.samples)) < 5e-3


@pytest.mark.slow
def test_volterra_is_second_order(make_config):
    config = make_config(eta=0.4, omega_c=1.03)
    settings = SolverConfig(corrector_tolerance=1e-14, history_mode="direct")
    finals = []
    for dt in (1.0, 0.5, 0.25, 0.125):
        traj = solve_volterra(config, TimeGrid(dt=dt, n_steps=int(round(200.0 / dt))), settings=settings)
        finals.append(traj.samples[-1])
    differences = [np.max(np.abs(finals[i] - finals[i + 1])) for i in range(3)]
    assert 3.0 < differences[0] / differences[1] < 5.0
    assert 3.0 < differences[1] / differences[2] < 5.0


def test_blocked_history_matches_direct(in_band_config):
    grid = TimeGrid(dt=0.5, n_steps=300)
    direct = solve_volterra(in_band_config, grid, settings=SolverConfig(history_mode="direct"))
    blocked = solve_volterra(
        in_band_config, grid, settings=SolverConfig(history_mode="blocked", history_block=37)
    )
    assert np.allclose(blocked.samples, direct.samples, rtol=0.0, atol=1e-12)


def test_resume_continues_identically(in_band_config):
    grid = TimeGrid(dt=0.5, n_steps=120)
    full = solve_volterra(in_band_config, grid)
    partial = PropagatorTrajectory(
        grid=TimeGrid(dt=0.5, n_steps=70),
        frame_frequency=full.frame_frequency,
        samples=full.samples[:71],
        method=METHOD_VOLTERRA,
        config_hash=full.config_hash,
    )
    resumed = solve_volterra(in_band_config, grid, resume=partial)
    assert np.allclose(resumed.samples, full.samples, rtol=0.0, atol=1e-12)


def test_resume_rejects_other_configuration(in_band_config, out_of_band_config):
    grid = TimeGrid(dt=0.05, n_steps=40)
    other = solve_volterra(out_of_band_config, grid)
    with pytest.raises(ConfigurationError):
        solve_volterra(in_band_config, grid, resume=other)


def test_volterra_is_passive(in_band_config):
    traj = solve_volterra(in_band_config, TimeGrid.from_tmax(600.0, 0.5))
    assert traj.max_singular_value <= 1.0 + 1e-6


# ============================================================================
# MASTER-EQUATION COEFFICIENTS
# ============================================================================

def test_coefficients_of_decoupled_cavities(make_config):
    config = make_config(xi1=0.0, xi2=0.0, omega_c1=1.0, omega_c2=1.02)
    coefficients = master_equation_coefficients(solve_volterra(config, TimeGrid(dt=0.5, n_steps=100)))
    assert coefficients.valid.all()
    assert np.allclose(coefficients.omega_ren.real, np.diag([1.0, 1.02])[None], atol=1e-6)
    assert np.allclose(coefficients.gamma, 0.0, atol=1e-6)


def test_resonant_coefficients_approach_markovian_rates(resonant_config):
    traj = solve_volterra(resonant_config, TimeGrid.from_tmax(500.0, 0.5))
    coefficients = master_equation_coefficients(traj)
    k = int(round(400.0 / traj.grid.dt))
    gamma = coefficients.gamma_at(k).as_array().real
    markov = markovian_rates(1.0, resonant_config).as_array().real
    assert gamma == pytest.approx(markov, rel=0.1)
    assert np.allclose(coefficients.omega_at(k).as_array(), np.eye(2), atol=1e-4)


def test_out_of_band_coefficients_are_a_beam_splitter(out_of_band_config):
    traj = weak_coupling_propagator(out_of_band_config, TimeGrid(dt=0.1, n_steps=400))
    coefficients = master_equation_coefficients(traj)
    interior = slice(1, -1)
    assert np.allclose(coefficients.gamma[interior], 0.0, atol=1e-10)
    shift = lamb_shift_matrix(1.2, out_of_band_config)
    omega12 = coefficients.omega_ren[interior, 0, 1].real
    assert np.allclose(omega12, -shift[0, 1], rtol=1e-3, atol=0.0)


def test_near_singular_samples_are_flagged(make_config):
    traj = weak_coupling_propagator(make_config(eta=0.08), TimeGrid(dt=5000.0, n_steps=20))
    coefficients = master_equation_coefficients(traj)
    assert coefficients.valid[0]
    assert not coefficients.valid[-1]
    assert np.all(np.isnan(coefficients.gamma[-1]))
