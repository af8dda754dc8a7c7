"""
Run artifacts on disk: CSV tables, JSON summaries and the binary trajectory format.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence, Union

import numpy as np

from ..core.errors import ArtifactFormatError, OutputError
from ..core.model import TimeGrid
from ..core.moments import EntanglementRecord
from ..core.propagator import MasterEquationCoefficients, PropagatorTrajectory

TRAJECTORY_FORMAT = "crow-entangle-trajectory"
TRAJECTORY_VERSION = 1

PathLike = Union[str, Path]

_ENTRIES = (("11", 0, 0), ("12", 0, 1), ("21", 1, 0), ("22", 1, 1))


def ensure_output_dir(path: PathLike) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        marker = path / ".write-test"
        marker.write_text("")
        marker.unlink()
    except OSError as exc:
        raise OutputError(f"Output directory {path} is not writable: {exc}") from exc
    return path


def format_float(value: float, digits: int = 17) -> str:
    """Round-trip formatting with ``digits`` significant digits."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{digits}g}"


def write_csv(path: PathLike, columns: Mapping[str, Sequence[Any]], digits: int = 17) -> Path:
    """Write equal-length columns; floats use a fixed significant-digit format."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    lengths = {array.shape[0] for array in arrays}
    if len(lengths) > 1:
        raise ValueError(f"CSV columns differ in length: {sorted(lengths)}")

    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(names)
            for row in zip(*arrays):
                writer.writerow(
                    int(cell) if np.issubdtype(type(cell), np.integer) or isinstance(cell, (bool, np.bool_))
                    else format_float(cell, digits)
                    for cell in row
                )
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}") from exc
    return path


def read_csv(path: PathLike) -> Dict[str, np.ndarray]:
    """Read a CSV written by write_csv back into float columns."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, index] for index, name in enumerate(header)}


def _matrix_columns(prefix: str, stack: np.ndarray) -> Dict[str, np.ndarray]:
    columns: Dict[str, np.ndarray] = {}
    for label, i, j in _ENTRIES:
        columns[f"Re_{prefix}{label}"] = stack[:, i, j].real
        columns[f"Im_{prefix}{label}"] = stack[:, i, j].imag
    return columns


def propagator_columns(traj: PropagatorTrajectory) -> Dict[str, np.ndarray]:
    """t plus Re/Im of the four rotating-frame entries of μ̃."""
    return {"t": traj.times, **_matrix_columns("mu", traj.samples)}


def coefficient_columns(coefficients: MasterEquationCoefficients) -> Dict[str, np.ndarray]:
    return {
        "t": coefficients.times,
        "valid": coefficients.valid.astype(int),
        **_matrix_columns("omega", coefficients.omega_ren),
        **_matrix_columns("gamma", coefficients.gamma),
    }


def entanglement_columns(records: Sequence[EntanglementRecord]) -> Dict[str, np.ndarray]:
    def column(name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in records])

    columns = {
        "t": column("t"),
        "E_N": column("E_N"),
        "P": column("purity"),
        "n11": column("n11"),
        "n22": column("n22"),
    }
    for name in ("s11", "s22", "s12", "n12"):
        values = column(name)
        columns[f"Re_{name}"] = values.real
        columns[f"Im_{name}"] = values.imag
    columns["lambda"] = column("lambda_")
    return columns


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: PathLike, data: Mapping[str, Any]) -> Path:
    """Deterministic JSON: sorted keys, non-finite floats as null."""
    path = Path(path)
    try:
        path.write_text(json.dumps(_json_safe(dict(data)), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}") from exc
    return path


def save_trajectory(path: PathLike, traj: PropagatorTrajectory) -> Path:
    """Binary resume format: a versioned JSON header next to the sample array."""
    header = {
        "format": TRAJECTORY_FORMAT,
        "version": TRAJECTORY_VERSION,
        "method": traj.method,
        "frame_frequency": traj.frame_frequency,
        "config_hash": traj.config_hash,
        "grid": traj.grid.to_dict(),
    }
    path = Path(path)
    try:
        with path.open("wb") as handle:
            np.savez(handle, header=np.array(json.dumps(header, sort_keys=True)), samples=traj.samples)
    except OSError as exc:
        raise OutputError(f"Cannot write {path}: {exc}") from exc
    return path


def load_trajectory(path: PathLike) -> PropagatorTrajectory:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            header = json.loads(str(archive["header"]))
            samples = np.array(archive["samples"])
    except (OSError, KeyError, ValueError) as exc:
        raise ArtifactFormatError(f"{path} is not a trajectory file: {exc}") from exc

    if header.get("format") != TRAJECTORY_FORMAT:
        raise ArtifactFormatError(f"{path}: unexpected format {header.get('format')!r}")
    if header.get("version") != TRAJECTORY_VERSION:
        raise ArtifactFormatError(
            f"{path}: version {header.get('version')} not supported (expected {TRAJECTORY_VERSION})"
        )
    grid = header["grid"]
    return PropagatorTrajectory(
        grid=TimeGrid(dt=float(grid["dt"]), n_steps=int(grid["n_steps"]), t0=float(grid["t0"])),
        frame_frequency=float(header["frame_frequency"]),
        samples=samples,
        method=header["method"],
        config_hash=header.get("config_hash", ""),
    )
