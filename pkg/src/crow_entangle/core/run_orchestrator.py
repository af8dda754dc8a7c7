"""
Runs a scenario: expands its sweep, fans the runs out to simulation workers
and writes the manifest once every run has finished.
"""

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..utils import artifacts
from ..utils.logger import get_logger
from .config import Config, get_config
from .scenarios import RunSpec, Scenario

MANIFEST_NAME = "manifest.json"


def get_simulation_worker():
    """Get the worker entry points (lazy import to avoid circular dependencies)."""
    from ..workers.simulation_worker import SimulationWorker, execute_run
    return SimulationWorker, execute_run


@dataclass
class RunManifest:
    """Outcome of a scenario; ``runs`` are sorted by config hash."""

    scenario: str
    output_dir: Path
    runs: List[Dict[str, Any]] = field(default_factory=list)
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> List[Dict[str, Any]]:
        return [run for run in self.runs if run["status"] != "ok"]

    @property
    def ok(self) -> bool:
        return not self.failed

    @property
    def path(self) -> Path:
        return self.output_dir / MANIFEST_NAME


class RunOrchestrator:
    """Coordinates the simulation workers of one scenario."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or get_config()
        self.logger = get_logger("orchestrator")

    def run_scenario(
        self,
        scenario: Scenario,
        output_dir: Optional[Union[str, Path]] = None,
        workers: Optional[int] = None,
    ) -> RunManifest:
        output_dir = artifacts.ensure_output_dir(output_dir or self.config.output.output_dir)
        workers = max(1, workers if workers is not None else self.config.output.workers)
        runs = scenario.expand()

        self.logger.info(
            f"Scenario {scenario.name}: {len(runs)} run(s), methods {', '.join(scenario.methods)}, "
            f"{scenario.grid.n_steps} steps of dt={scenario.grid.dt:g}"
        )
        started = time.perf_counter()
        results = self._execute(runs, output_dir, workers)
        results.sort(key=lambda result: (result["config_hash"], result["run_id"]))

        data = {
            "scenario": scenario.name,
            "description": scenario.description,
            "figure": scenario.figure,
            "grid": scenario.grid.to_dict(),
            "methods": list(scenario.methods),
            "outputs": list(scenario.outputs),
            "sweep": {key: list(values) for key, values in scenario.sweep.items()},
            "sweep_mode": scenario.sweep_mode,
            "solver": self.config.to_dict()["solver"],
            "analysis": self.config.to_dict()["analysis"],
            "runs": results,
            "failed": sum(1 for result in results if result["status"] != "ok"),
        }
        manifest = RunManifest(scenario=scenario.name, output_dir=output_dir, runs=results, data=data)
        artifacts.write_json(manifest.path, data)

        elapsed = time.perf_counter() - started
        if manifest.ok:
            self.logger.success(f"Scenario {scenario.name} finished in {elapsed:.1f}s -> {output_dir}")
        else:
            self.logger.warning(
                f"Scenario {scenario.name}: {len(manifest.failed)} of {len(results)} run(s) failed "
                f"({elapsed:.1f}s)"
            )
        return manifest

    def _execute(self, runs: List[RunSpec], output_dir: Path, workers: int) -> List[Dict[str, Any]]:
        _, execute_run = get_simulation_worker()
        results: List[Dict[str, Any]] = []

        if workers == 1 or len(runs) <= 1:
            for run in runs:
                try:
                    results.append(execute_run(run, str(output_dir), self.config))
                except Exception as e:
                    results.append(self._failure(run, e))
            return results

        with ProcessPoolExecutor(max_workers=min(workers, len(runs))) as pool:
            futures = {pool.submit(execute_run, run, str(output_dir), self.config): run for run in runs}
            for future in as_completed(futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    results.append(self._failure(futures[future], e))
        return results

    def _failure(self, run: RunSpec, error: Exception) -> Dict[str, Any]:
        self.logger.log_error_with_context(error, f"worker for {run.run_id}")
        return {
            "run_id": run.run_id,
            "config_hash": run.config_hash,
            "point": run.point,
            "status": "failed",
            "errors": [{"method": "*", "error": type(error).__name__, "message": str(error)}],
            "files": [],
            "metrics": {},
        }


def run_scenario(
    scenario: Scenario,
    output_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
    config: Optional[Config] = None,
) -> RunManifest:
    """Run every point of ``scenario`` and write its artifact bundle."""
    return RunOrchestrator(config).run_scenario(scenario, output_dir, workers)
