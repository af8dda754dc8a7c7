"""
Executes a single expanded run: solve the propagator with each requested
method, derive moments and coefficients, and write the run's files.
"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.config import Config, get_config
from ..core.errors import CrowError
from ..core.moments import entanglement_records, evolve_moments, initial_moments, summarize
from ..core.propagator import (
    METHOD_ALIASES,
    METHOD_VOLTERRA,
    PropagatorTrajectory,
    master_equation_coefficients,
    solve,
    solve_volterra,
)
from ..core.scenarios import RunSpec
from ..core.spectral import kernel_table, spectral_table
from ..utils import artifacts
from ..utils.logger import get_logger, setup_logging

SPECTRUM_POINTS = 801


class SimulationWorker:
    """Worker that turns one RunSpec into CSV/JSON files and a result record."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or get_config()
        self.logger = get_logger("simulation-worker")

        self.is_initialized = False
        self.runs_completed = 0
        self.runs_failed = 0
        self.total_solve_time = 0.0

    def initialize(self, output_dir: Path) -> bool:
        """Make sure the output directory exists and is writable."""
        try:
            self.output_dir = artifacts.ensure_output_dir(output_dir)
            self.is_initialized = True
            return True
        except CrowError as e:
            self.logger.error(f"Simulation worker initialization failed: {e}")
            self.is_initialized = False
            return False

    def execute(self, run: RunSpec) -> Dict[str, Any]:
        """Compute every method and output of ``run``; method failures are recorded, not raised."""
        if not self.is_initialized:
            raise RuntimeError("SimulationWorker.initialize() must succeed before execute()")

        digits = self.config.output.float_digits
        files: List[str] = []
        methods: Dict[str, Any] = {}
        errors: List[Dict[str, str]] = []

        self.logger.info(f"Run {run.run_id}: {run.point or 'base configuration'}")

        if "spectra" in run.outputs:
            files.extend(self.write_spectra(run, digits))

        for method in run.methods:
            started = time.perf_counter()
            try:
                methods[method] = self._execute_method(run, method, digits, files)
            except CrowError as e:
                self.logger.log_error_with_context(e, f"{run.run_id} [{method}]")
                failure = {"method": method, "error": type(e).__name__, "message": str(e)}
                errors.append(failure)
                methods[method] = {"error": failure["error"], "message": failure["message"]}
            finally:
                self.total_solve_time += time.perf_counter() - started

        summary_path = self.output_dir / f"{run.run_id}_summary.json"
        artifacts.write_json(
            summary_path,
            {
                "run_id": run.run_id,
                "scenario": run.scenario,
                "point": run.point,
                "config": run.config.to_dict(),
                "config_hash": run.config_hash,
                "regimes": [regime.value for regime in run.config.regimes],
                "grid": run.grid.to_dict(),
                "methods": methods,
            },
        )
        files.append(summary_path.name)

        if errors:
            self.runs_failed += 1
        else:
            self.runs_completed += 1
            self.logger.success(f"Run {run.run_id} finished")

        return {
            "run_id": run.run_id,
            "config_hash": run.config_hash,
            "point": run.point,
            "status": "failed" if errors else "ok",
            "errors": errors,
            "files": sorted(files),
            "metrics": {
                method: {"E_N_max": result.get("E_N_max")}
                for method, result in methods.items()
                if "E_N_max" in result
            },
        }

    def write_spectra(self, run: RunSpec, digits: int) -> List[str]:
        low, high = run.config.band
        margin = 0.1 * (high - low)
        omegas = np.linspace(low - margin, high + margin, SPECTRUM_POINTS)
        spectra = self.output_dir / f"{run.run_id}_spectra.csv"
        kernel = self.output_dir / f"{run.run_id}_kernel.csv"
        artifacts.write_csv(spectra, spectral_table(run.config, omegas), digits)
        artifacts.write_csv(kernel, kernel_table(run.config, run.grid.times), digits)
        return [spectra.name, kernel.name]

    def _execute_method(self, run: RunSpec, method: str, digits: int, files: List[str]) -> Dict[str, Any]:
        trajectory = self._trajectory(run, method)
        result: Dict[str, Any] = {"max_singular_value": trajectory.max_singular_value}

        if "propagator" in run.outputs:
            path = self.output_dir / f"{run.run_id}_propagator_{method}.csv"
            artifacts.write_csv(path, artifacts.propagator_columns(trajectory), digits)
            files.append(path.name)

        if "coefficients" in run.outputs:
            coefficients = master_equation_coefficients(trajectory, self.config.analysis.singular_floor)
            path = self.output_dir / f"{run.run_id}_coefficients_{method}.csv"
            artifacts.write_csv(path, artifacts.coefficient_columns(coefficients), digits)
            files.append(path.name)

        if "entanglement" in run.outputs:
            series = evolve_moments(trajectory, initial_moments(run.config.r1, run.config.r2))
            records = entanglement_records(series)
            path = self.output_dir / f"{run.run_id}_entanglement_{method}.csv"
            artifacts.write_csv(path, artifacts.entanglement_columns(records), digits)
            files.append(path.name)
            result.update(summarize(records, series, run.config, self.config.analysis))
            result.pop("config", None)

        return result

    def _trajectory(self, run: RunSpec, method: str) -> PropagatorTrajectory:
        if METHOD_ALIASES.get(method) != METHOD_VOLTERRA:
            return solve(run.config, run.grid, method, self.config.solver)

        binary = self.output_dir / f"{run.run_id}_{METHOD_VOLTERRA}.npz"
        resume = self._load_resume(binary, run)
        trajectory = solve_volterra(run.config, run.grid, settings=self.config.solver, resume=resume)
        if self.config.output.save_binary:
            artifacts.save_trajectory(binary, trajectory)
        return trajectory

    def _load_resume(self, path: Path, run: RunSpec) -> Optional[PropagatorTrajectory]:
        if not path.is_file():
            return None
        try:
            previous = artifacts.load_trajectory(path)
        except CrowError as e:
            self.logger.warning(f"Ignoring unreadable trajectory {path.name}: {e}")
            return None
        if previous.config_hash != run.config_hash or previous.grid.dt != run.grid.dt:
            self.logger.debug(f"Stored trajectory {path.name} does not match; solving from scratch")
            return None
        return previous

    def get_status(self) -> str:
        if not self.is_initialized:
            return "Simulation worker: not initialized"
        return (
            f"Simulation worker: {self.runs_completed} runs ok, {self.runs_failed} failed, "
            f"{self.total_solve_time:.1f}s solving"
        )

    def cleanup(self) -> None:
        self.is_initialized = False
        self.logger.debug("Simulation worker cleaned up")


def execute_run(run: RunSpec, output_dir: str, config: Optional[Config] = None) -> Dict[str, Any]:
    """Process-pool entry point: one worker per run."""
    if config is not None:
        setup_logging("simulation-worker", config)
    worker = SimulationWorker(config)
    if not worker.initialize(Path(output_dir)):
        return {
            "run_id": run.run_id,
            "config_hash": run.config_hash,
            "point": run.point,
            "status": "failed",
            "errors": [{"method": "*", "error": "OutputError", "message": f"cannot write to {output_dir}"}],
            "files": [],
            "metrics": {},
        }
    try:
        return worker.execute(run)
    finally:
        worker.cleanup()
