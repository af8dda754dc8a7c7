"""
Tests for scenario presets, sweep expansion, CLI-style overrides and scenario files.
"""

import pytest

from crow_entangle.core.errors import ConfigurationError, ValidationError
from crow_entangle.core.model import Regime, TimeGrid
from crow_entangle.core.scenarios import (
    BASE,
    PRESETS,
    Scenario,
    get_preset,
    list_presets,
    parse_methods,
    parse_outputs,
    scenario_from_file,
)


# ============================================================================
# PRESETS
# ============================================================================

def test_preset_names_and_order():
    assert [info.name for info in list_presets()] == [
        "fig2", "fig3", "fig4", "fig5", "fig6a", "fig6c", "fig7", "fig8",
    ]


def test_preset_regimes():
    regimes = {info.name: info.regime for info in list_presets()}
    assert regimes["fig3"] == "Resonant"
    assert regimes["fig6a"] == "OutOfBand"
    assert regimes["fig7"] == "InBand"
    assert regimes["fig8"] == "InBand"


def test_every_preset_expands_to_valid_runs():
    for name, preset in PRESETS.items():
        runs = preset.expand()
        assert runs, name
        assert len({run.run_id for run in runs}) == len(runs)
        for run in runs:
            assert run.run_id.startswith(f"{name}_")
            assert run.config.xi0 == pytest.approx(0.05)
            assert run.config.r1 == run.config.r2 == 1.0


def test_fig3_zips_sites_with_couplings():
    runs = get_preset("fig3").expand()
    assert [(run.config.n2, run.config.eta) for run in runs] == [
        (5, pytest.approx(0.08)), (9, pytest.approx(0.05)), (15, pytest.approx(0.01)),
    ]
    assert all(run.config.regimes == (Regime.RESONANT, Regime.RESONANT) for run in runs)


def test_fig4_is_a_product_sweep():
    runs = get_preset("fig4").expand()
    assert len(runs) == 6
    assert {(round(run.config.eta, 3), run.config.n2) for run in runs} == {
        (0.2, 5), (0.2, 15), (0.2, 25), (0.4, 5), (0.4, 15), (0.4, 25),
    }


def test_fig8_configuration():
    preset = get_preset("fig8")
    assert preset.config.omega_c1 == preset.config.omega_c2 == 1.06
    assert preset.config.n2 == 5


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        get_preset("fig9")


# ============================================================================
# OVERRIDES
# ============================================================================

def test_override_of_swept_key_pins_the_axis():
    scenario = get_preset("fig6a").with_overrides({"eta": "0.3", "n2": "2"})
    runs = scenario.expand()
    assert len(runs) == 1
    assert runs[0].config.eta == pytest.approx(0.3)
    assert runs[0].config.n2 == 2


def test_grid_and_method_overrides():
    scenario = get_preset("fig7").with_overrides(dt=0.25, tmax=100.0, methods="weak,oracle")
    assert scenario.grid == TimeGrid.from_tmax(100.0, 0.25)
    assert scenario.methods == ("weak", "oracle")
    assert len(scenario.expand()) == 3


def test_unknown_override_key_is_rejected():
    with pytest.raises(ConfigurationError):
        get_preset("fig7").with_overrides({"temperature": "4"})


def test_invalid_override_fails_on_expansion():
    scenario = get_preset("fig5").with_overrides({"n1": "4", "n2": "4"})
    with pytest.raises(ValidationError):
        scenario.expand()


def test_parse_methods():
    assert parse_methods("all") == ("exact", "weak", "oracle")
    assert parse_methods("weak, exact,weak") == ("weak", "exact")
    with pytest.raises(ConfigurationError):
        parse_methods("markov")
    with pytest.raises(ConfigurationError):
        parse_methods("")


def test_parse_outputs():
    assert parse_outputs("entanglement,propagator") == ("entanglement", "propagator")
    with pytest.raises(ConfigurationError):
        parse_outputs("wigner")


def test_scenario_rejects_bad_sweeps():
    grid = TimeGrid(dt=0.5, n_steps=10)
    with pytest.raises(ConfigurationError):
        Scenario(name="x", config=BASE, grid=grid, sweep={"temperature": (1.0,)})
    with pytest.raises(ConfigurationError):
        Scenario(name="x", config=BASE, grid=grid, sweep={"n2": (2, 3), "eta": (0.1,)}, sweep_mode="zip")
    with pytest.raises(ConfigurationError):
        Scenario(name="x", config=BASE, grid=grid, sweep_mode="diagonal")


# ============================================================================
# SCENARIO FILES
# ============================================================================

def test_scenario_from_file(temp_dir):
    path = temp_dir / "offband.env"
    path.write_text(
        "name=offband\n"
        "omega_c=1.2\n"
        "eta=0.2\n"
        "method=exact,weak\n"
        "outputs=entanglement,coefficients\n"
        "dt=0.25\n"
        "tmax=50\n"
        "sweep.n2=2,3,4\n"
    )
    scenario = scenario_from_file(path, {"r": "0.5"})
    assert scenario.name == "offband"
    assert scenario.methods == ("exact", "weak")
    assert scenario.outputs == ("entanglement", "coefficients")
    assert scenario.grid == TimeGrid.from_tmax(50.0, 0.25)
    runs = scenario.expand()
    assert [run.config.n2 for run in runs] == [2, 3, 4]
    assert all(run.config.squeezing == (0.5, 0.5) for run in runs)
    assert scenario.regime is Regime.OUT_OF_BAND


def test_scenario_file_defaults_to_its_stem(temp_dir):
    path = temp_dir / "plain.env"
    path.write_text("eta=0.1\n")
    scenario = scenario_from_file(path)
    assert scenario.name == "plain"
    assert scenario.methods == ("exact",)
    assert scenario.grid.dt == 0.5


def test_scenario_file_sweeps_are_rescaled(temp_dir):
    path = temp_dir / "thz.env"
    path.write_text("omega0=200\nxi0=10\neta=0.2\ndt=0.0025\ntmax=1\nsweep.omega_c=206,212\n")
    runs = scenario_from_file(path).expand()
    assert [run.config.omega_c1 for run in runs] == [pytest.approx(1.03), pytest.approx(1.06)]


def test_scenario_file_rejects_unknown_keys(temp_dir):
    path = temp_dir / "typo.env"
    path.write_text("eta=0.1\nmethd=weak\n")
    with pytest.raises(ConfigurationError):
        scenario_from_file(path)


def test_scenario_file_rejects_non_integer_site_sweep(temp_dir):
    path = temp_dir / "sites.env"
    path.write_text("sweep.n2=2,3.5\n")
    with pytest.raises(ConfigurationError):
        scenario_from_file(path)
