"""
Tests for the run orchestrator and the simulation worker: artifact bundles,
manifests, resume files and failure isolation.
"""

import json

import pytest

from crow_entangle.core.errors import NumericalFailureError
from crow_entangle.core.model import TimeGrid
from crow_entangle.core.run_orchestrator import MANIFEST_NAME, RunOrchestrator, run_scenario
from crow_entangle.core.scenarios import Scenario
from crow_entangle.workers import simulation_worker
from crow_entangle.workers.simulation_worker import SimulationWorker, execute_run


@pytest.fixture
def mini_scenario(make_config):
    return Scenario(
        name="mini",
        config=make_config(eta=0.2, omega_c=1.03),
        grid=TimeGrid(dt=0.5, n_steps=40),
        methods=("exact", "weak", "oracle"),
        outputs=("spectra", "propagator", "entanglement", "coefficients"),
        sweep={"n2": (2, 3)},
    )


def test_inline_run_writes_the_bundle(mini_scenario, temp_dir, settings):
    out = temp_dir / "mini"
    manifest = run_scenario(mini_scenario, out, workers=1, config=settings)

    assert manifest.ok
    assert manifest.path == out / MANIFEST_NAME
    assert len(manifest.runs) == 2
    for result in manifest.runs:
        run_id = result["run_id"]
        assert result["status"] == "ok"
        for name in ("spectra.csv", "kernel.csv", "summary.json"):
            assert (out / f"{run_id}_{name}").is_file()
        for method in ("exact", "weak", "oracle"):
            for output in ("propagator", "entanglement", "coefficients"):
                assert f"{run_id}_{output}_{method}.csv" in result["files"]
        assert (out / f"{run_id}_volterra.npz").is_file()
        assert set(result["metrics"]) == {"exact", "weak", "oracle"}


def test_manifest_is_sorted_and_complete(mini_scenario, temp_dir, settings):
    manifest = run_scenario(mini_scenario, temp_dir / "mini", workers=1, config=settings)
    data = json.loads(manifest.path.read_text())

    hashes = [run["config_hash"] for run in data["runs"]]
    assert hashes == sorted(hashes)
    assert data["failed"] == 0
    assert data["sweep"] == {"n2": [2, 3]}
    assert data["grid"]["n_steps"] == 40
    assert data["solver"]["kernel_backend"] == "bessel"


def test_summary_json_carries_metrics(mini_scenario, temp_dir, settings):
    manifest = run_scenario(mini_scenario, temp_dir / "mini", workers=1, config=settings)
    run_id = manifest.runs[0]["run_id"]
    summary = json.loads((temp_dir / "mini" / f"{run_id}_summary.json").read_text())

    assert summary["regimes"] == ["InBand", "InBand"]
    exact = summary["methods"]["exact"]
    assert exact["E_N_max"] >= 0.0
    assert exact["max_singular_value"] <= 1.0 + 1e-6
    assert "final" in exact and "esd_esb" in exact


def test_rerun_is_byte_identical(mini_scenario, temp_dir, settings):
    out = temp_dir / "mini"
    first = run_scenario(mini_scenario, out, workers=1, config=settings)
    snapshot = {path.name: path.read_bytes() for path in out.iterdir() if path.suffix in (".csv", ".json")}

    second = run_scenario(mini_scenario, out, workers=1, config=settings)
    assert [run["run_id"] for run in second.runs] == [run["run_id"] for run in first.runs]
    for name, content in snapshot.items():
        assert (out / name).read_bytes() == content, name


def test_parallel_run_matches_inline(mini_scenario, temp_dir, settings):
    inline = run_scenario(mini_scenario, temp_dir / "inline", workers=1, config=settings)
    parallel = run_scenario(mini_scenario, temp_dir / "parallel", workers=2, config=settings)

    assert parallel.ok
    assert [run["run_id"] for run in parallel.runs] == [run["run_id"] for run in inline.runs]
    for run in inline.runs:
        name = f"{run['run_id']}_entanglement_exact.csv"
        assert (temp_dir / "parallel" / name).read_bytes() == (temp_dir / "inline" / name).read_bytes()


def test_method_failure_is_recorded_per_run(make_config, temp_dir, settings):
    scenario = Scenario(
        name="detuned",
        config=make_config(eta=0.2, omega_c1=1.0, omega_c2=1.02),
        grid=TimeGrid(dt=0.5, n_steps=20),
        methods=("exact", "weak"),
    )
    manifest = run_scenario(scenario, temp_dir / "detuned", workers=1, config=settings)

    assert not manifest.ok
    (result,) = manifest.runs
    assert result["status"] == "failed"
    assert [error["method"] for error in result["errors"]] == ["weak"]
    assert result["errors"][0]["error"] == "UnsupportedConfigurationError"
    assert "exact" in result["metrics"]
    assert f"{result['run_id']}_entanglement_exact.csv" in result["files"]


def test_failing_run_does_not_abort_siblings(mini_scenario, temp_dir, settings, mocker):
    original = simulation_worker.solve_volterra

    def flaky(config, grid, **kwargs):
        if config.n2 == 3:
            raise NumericalFailureError("corrector did not converge", 7)
        return original(config, grid, **kwargs)

    mocker.patch.object(simulation_worker, "solve_volterra", side_effect=flaky)
    manifest = run_scenario(mini_scenario, temp_dir / "mini", workers=1, config=settings)

    statuses = {run["point"]["n2"]: run["status"] for run in manifest.runs}
    assert statuses == {2: "ok", 3: "failed"}
    data = json.loads(manifest.path.read_text())
    assert data["failed"] == 1


def test_unexpected_worker_error_becomes_a_failure_record(mini_scenario, temp_dir, settings, mocker):
    mocker.patch.object(simulation_worker, "execute_run", side_effect=RuntimeError("worker crashed"))
    manifest = RunOrchestrator(settings).run_scenario(mini_scenario, temp_dir / "mini", workers=1)

    assert len(manifest.failed) == 2
    assert all(run["errors"][0]["error"] == "RuntimeError" for run in manifest.runs)
    assert manifest.path.is_file()


# ============================================================================
# SIMULATION WORKER
# ============================================================================

def test_worker_requires_initialization(mini_scenario, settings):
    worker = SimulationWorker(settings)
    assert "not initialized" in worker.get_status()
    with pytest.raises(RuntimeError):
        worker.execute(mini_scenario.expand()[0])


def test_worker_initialization_fails_on_unwritable_path(temp_dir, settings):
    blocker = temp_dir / "file"
    blocker.write_text("")
    assert not SimulationWorker(settings).initialize(blocker / "out")


def test_worker_resumes_stored_volterra_trajectory(mini_scenario, temp_dir, settings, mocker):
    run = mini_scenario.expand()[0]
    worker = SimulationWorker(settings)
    assert worker.initialize(temp_dir / "resume")

    spy = mocker.spy(simulation_worker, "solve_volterra")
    worker.execute(run)
    worker.execute(run)

    assert spy.call_count == 2
    assert spy.call_args_list[0].kwargs["resume"] is None
    assert spy.call_args_list[1].kwargs["resume"] is not None
    assert "2 runs ok" in worker.get_status()


def test_execute_run_reports_unwritable_output(mini_scenario, temp_dir, settings):
    blocker = temp_dir / "file"
    blocker.write_text("")
    result = execute_run(mini_scenario.expand()[0], str(blocker / "out"), settings)
    assert result["status"] == "failed"
    assert result["errors"][0]["error"] == "OutputError"
