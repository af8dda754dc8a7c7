"""
Scenarios: a base configuration, a time grid, what to compute and optional sweep axes.

Presets reproduce the published parameter sets with omega0 = 1, xi0 = 0.05,
r = 1 and the first cavity at site 1.
"""

import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import ConfigurationError
from .model import (
    CONVENIENCE_KEYS,
    Regime,
    SystemConfig,
    TimeGrid,
    build_config,
    load_config_file,
    validate,
)

METHODS = ("exact", "weak", "oracle")
OUTPUTS = ("spectra", "propagator", "entanglement", "coefficients")
SWEEP_MODES = ("product", "zip")

_SWEEPABLE = set(SystemConfig.__dataclass_fields__) | set(CONVENIENCE_KEYS)


def parse_methods(selection: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    """``all`` or a comma list of exact, weak, oracle."""
    if isinstance(selection, str):
        selection = [part.strip() for part in selection.split(",") if part.strip()]
    methods: List[str] = []
    for method in selection:
        chosen = METHODS if method == "all" else (method,)
        for item in chosen:
            if item not in METHODS:
                raise ConfigurationError(f"Unknown method {item!r}; choose from {', '.join(METHODS)} or all")
            if item not in methods:
                methods.append(item)
    if not methods:
        raise ConfigurationError("At least one method is required")
    return tuple(methods)


def parse_outputs(selection: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    if isinstance(selection, str):
        selection = [part.strip() for part in selection.split(",") if part.strip()]
    for output in selection:
        if output not in OUTPUTS:
            raise ConfigurationError(f"Unknown output {output!r}; choose from {', '.join(OUTPUTS)}")
    if not selection:
        raise ConfigurationError("At least one output is required")
    return tuple(dict.fromkeys(selection))


@dataclass(frozen=True)
class RunSpec:
    """One point of an expanded scenario."""

    run_id: str
    scenario: str
    config: SystemConfig
    grid: TimeGrid
    methods: Tuple[str, ...]
    outputs: Tuple[str, ...]
    point: Dict[str, Any] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()


@dataclass(frozen=True)
class Scenario:
    name: str
    config: SystemConfig
    grid: TimeGrid
    methods: Tuple[str, ...] = ("exact",)
    outputs: Tuple[str, ...] = ("entanglement",)
    sweep: Dict[str, Tuple[Any, ...]] = field(default_factory=dict)
    sweep_mode: str = "product"
    description: str = ""
    figure: str = ""

    def __post_init__(self) -> None:
        if self.sweep_mode not in SWEEP_MODES:
            raise ConfigurationError(f"sweep_mode must be one of {SWEEP_MODES}, got {self.sweep_mode!r}")
        unknown = set(self.sweep) - _SWEEPABLE
        if unknown:
            raise ConfigurationError(f"Cannot sweep unknown keys: {sorted(unknown)}")
        if self.sweep_mode == "zip" and len({len(values) for values in self.sweep.values()}) > 1:
            raise ConfigurationError("zip sweeps need axes of equal length")
        parse_methods(self.methods)
        parse_outputs(self.outputs)

    @property
    def regime(self) -> Regime:
        return self.config.regimes[0]

    def points(self) -> List[Dict[str, Any]]:
        if not self.sweep:
            return [{}]
        keys = list(self.sweep)
        if self.sweep_mode == "zip":
            combos = zip(*(self.sweep[key] for key in keys))
        else:
            combos = itertools.product(*(self.sweep[key] for key in keys))
        return [dict(zip(keys, combo)) for combo in combos]

    def expand(self) -> List[RunSpec]:
        """One RunSpec per sweep point, all sharing this scenario's grid."""
        runs = []
        for point in self.points():
            config = self.config.with_overrides(**point)
            validate(config, self.grid).raise_for_issues()
            runs.append(
                RunSpec(
                    run_id=f"{self.name}_{config.config_hash()[:12]}",
                    scenario=self.name,
                    config=config,
                    grid=self.grid,
                    methods=self.methods,
                    outputs=self.outputs,
                    point=point,
                )
            )
        return runs

    def with_overrides(
        self,
        overrides: Optional[Mapping[str, str]] = None,
        dt: Optional[float] = None,
        tmax: Optional[float] = None,
        methods: Optional[Union[str, Sequence[str]]] = None,
    ) -> "Scenario":
        """Apply CLI settings; an override of a swept key pins that axis."""
        scenario = self
        if overrides:
            loaded = build_config({}, overrides, base=self.config)
            if loaded.extras:
                raise ConfigurationError(f"Unknown override keys: {sorted(loaded.extras)}")
            sweep = {key: values for key, values in self.sweep.items() if key not in overrides}
            scenario = replace(scenario, config=loaded.config, sweep=sweep)
            if loaded.dt is not None or loaded.tmax is not None:
                dt = dt if dt is not None else loaded.dt
                tmax = tmax if tmax is not None else loaded.tmax
        if dt is not None or tmax is not None:
            new_dt = dt if dt is not None else scenario.grid.dt
            new_tmax = tmax if tmax is not None else scenario.grid.t_max
            scenario = replace(scenario, grid=TimeGrid.from_tmax(new_tmax, new_dt))
        if methods is not None:
            scenario = replace(scenario, methods=parse_methods(methods))
        return scenario


BASE = SystemConfig(omega0=1.0, xi0=0.05, n1=1, n2=5, r1=1.0, r2=1.0)


def _preset(
    name: str,
    figure: str,
    description: str,
    dt: float,
    tmax: float,
    sweep: Dict[str, Tuple[Any, ...]],
    outputs: Tuple[str, ...] = ("entanglement",),
    sweep_mode: str = "product",
    **base: Any,
) -> Scenario:
    return Scenario(
        name=name,
        figure=figure,
        description=description,
        config=BASE.with_overrides(**base),
        grid=TimeGrid.from_tmax(tmax, dt),
        outputs=outputs,
        sweep=sweep,
        sweep_mode=sweep_mode,
    )


def _build_presets() -> Dict[str, Scenario]:
    presets = [
        _preset(
            "fig2", "Fig. 2",
            "Spectral densities J11, J22, J12 and memory kernels for n2 = 2..5, xi = 0.2 xi0",
            1.0, 1000.0, {"n2": (2, 3, 4, 5)}, outputs=("spectra",), eta=0.2,
        ),
        _preset(
            "fig3", "Fig. 3",
            "Resonant steady entanglement E_N -> r for (n2, eta) = (5, .08), (9, .05), (15, .01)",
            1.5, 4.5e5, {"n2": (5, 9, 15), "eta": (0.08, 0.05, 0.01)}, sweep_mode="zip",
        ),
        _preset(
            "fig4", "Fig. 4",
            "Resonant strong coupling, sudden death and birth: eta in {0.2, 0.4}, n2 in {5, 15, 25}",
            0.5, 2000.0, {"eta": (0.2, 0.4), "n2": (5, 15, 25)},
            outputs=("entanglement", "propagator"),
        ),
        _preset(
            "fig5", "Fig. 5",
            "Resonant, second cavity at an even site (n2 = 2, 4): transient entanglement only",
            0.5, 4000.0, {"n2": (2, 4)}, eta=0.2,
        ),
        _preset(
            "fig6a", "Fig. 6(a)",
            "Out of band, omega_c = 1.2: beam-splitter entanglement, eta in {0.2, 0.4}; "
            "n2 = 5 by default (override with --set n2=...)",
            0.25, 6000.0, {"eta": (0.2, 0.4)}, omega_c=1.2,
            outputs=("entanglement", "coefficients"),
        ),
        _preset(
            "fig6c", "Fig. 6(c)",
            "Out of band, omega_c = 1.2, eta = 0.2: dependence on the second site n2 = 2..6",
            0.25, 6000.0, {"n2": (2, 3, 4, 5, 6)}, omega_c=1.2, eta=0.2,
        ),
        _preset(
            "fig7", "Fig. 7",
            "In band off centre, omega_c = 1.03, n2 = 5: decay to vacuum with sudden death and birth",
            0.5, 2000.0, {"eta": (0.1, 0.2, 0.4)}, omega_c=1.03,
        ),
        _preset(
            "fig8", "Fig. 8",
            "In band off centre, omega_c = 1.06, n2 = 5: enhanced long-time entanglement",
            0.5, 2000.0, {"eta": (0.1, 0.2, 0.4)}, omega_c=1.06,
        ),
    ]
    return {preset.name: preset for preset in presets}


PRESETS: Dict[str, Scenario] = _build_presets()


@dataclass(frozen=True)
class PresetInfo:
    name: str
    figure: str
    regime: str
    description: str


def list_presets() -> List[PresetInfo]:
    """Presets in their fixed order with the regime of the base configuration."""
    return [
        PresetInfo(name=name, figure=preset.figure, regime=preset.regime.value, description=preset.description)
        for name, preset in PRESETS.items()
    ]


def get_preset(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"Unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def scenario_from_file(path: Union[str, Path], overrides: Optional[Mapping[str, str]] = None) -> Scenario:
    """Build a scenario from a key=value file.

    Besides the configuration fields the file may set ``name``, ``method``,
    ``outputs``, ``dt``, ``tmax``, ``sweep_mode`` and ``sweep.<key>`` comma
    lists. Sweep values are given in the file's own frequency units.
    """
    path = Path(path)
    loaded = load_config_file(path, overrides, base=BASE)
    extras = dict(loaded.extras)

    sweep: Dict[str, Tuple[Any, ...]] = {}
    for key in [key for key in extras if key.startswith("sweep.")]:
        axis = key.split(".", 1)[1]
        values = tuple(value.strip() for value in extras.pop(key).split(",") if value.strip())
        if not values:
            raise ConfigurationError(f"{path}: sweep axis {axis!r} is empty")
        sweep[axis] = tuple(_sweep_value(axis, value, loaded.scale) for value in values)

    name = extras.pop("name", path.stem)
    methods = parse_methods(extras.pop("method", "exact"))
    outputs = parse_outputs(extras.pop("outputs", "entanglement"))
    sweep_mode = extras.pop("sweep_mode", "product")
    if extras:
        raise ConfigurationError(f"{path}: unknown keys {sorted(extras)}")

    dt = loaded.dt if loaded.dt is not None else 0.5
    tmax = loaded.tmax if loaded.tmax is not None else 1000.0
    return Scenario(
        name=name,
        config=loaded.config,
        grid=TimeGrid.from_tmax(tmax, dt),
        methods=methods,
        outputs=outputs,
        sweep=sweep,
        sweep_mode=sweep_mode,
        description=f"from {path.name}",
    )


_FREQUENCY_KEYS = {"omega0", "xi0", "omega_c1", "omega_c2", "xi1", "xi2", "omega_c"}


def _sweep_value(axis: str, value: str, scale: float) -> Any:
    if axis not in _SWEEPABLE:
        raise ConfigurationError(f"Cannot sweep unknown key {axis!r}")
    if axis in ("n1", "n2"):
        try:
            return int(value)
        except ValueError:
            raise ConfigurationError(f"sweep.{axis} needs integers, got {value!r}") from None
    try:
        number = float(value)
    except ValueError:
        raise ConfigurationError(f"sweep.{axis} needs numbers, got {value!r}") from None
    return number / scale if axis in _FREQUENCY_KEYS else number
