"""
Command-line interface for crow-entangle.
Runs figure presets or scenario files and writes CSV/JSON artifacts.
"""

import sys
from pathlib import Path
from typing import Optional, Tuple

import click
from rich.box import ROUNDED
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from .logger import setup_logging

console = Console()


def print_banner() -> None:
    banner_text = Text()
    banner_text.append("CROW-ENTANGLE", style="magenta bold")
    banner_text.append("\n")
    banner_text.append("Non-Markovian entanglement of two cavities on a coupled-resonator waveguide", style="cyan italic")
    console.print(Panel(banner_text, border_style="magenta", box=ROUNDED, padding=(1, 2)))


def _fail(error: Exception, action: str) -> None:
    """Print the error and exit with its code (2 for configuration problems)."""
    from ..core.errors import CrowError

    console.print(f"❌ {action}: {error}", style="red")
    sys.exit(error.exit_code if isinstance(error, CrowError) else 1)


def _parse_overrides(settings: Tuple[str, ...]) -> dict:
    from ..core.model import parse_override

    return dict(parse_override(text) for text in settings)


def resolve_scenario(
    target: str,
    settings: Tuple[str, ...] = (),
    dt: Optional[float] = None,
    tmax: Optional[float] = None,
    method: Optional[str] = None,
):
    """A preset name or the path of a key=value scenario file, with CLI settings applied."""
    from ..core.scenarios import get_preset, scenario_from_file

    overrides = _parse_overrides(settings)
    if Path(target).is_file():
        return scenario_from_file(target, overrides).with_overrides(dt=dt, tmax=tmax, methods=method)
    return get_preset(target).with_overrides(overrides, dt=dt, tmax=tmax, methods=method)


@click.group(invoke_without_command=True)
@click.option("--debug", is_flag=True, help="Enable debug mode")
@click.option("--no-colors", is_flag=True, help="Disable colored output")
@click.option("--version", is_flag=True, help="Show version information")
@click.pass_context
def cli(ctx, debug: bool, no_colors: bool, version: bool):
    """CROW-ENTANGLE: exact entanglement dynamics of two cavities on a CROW.

    Run a figure preset (see `list`) or a key=value scenario file.
    """
    from .. import __version__

    if version:
        console.print("CROW-ENTANGLE", style="bold magenta")
        console.print(f"v{__version__}", style="cyan")
        sys.exit(0)

    ctx.ensure_object(dict)

    from ..core.config import get_config

    config = get_config()
    if debug:
        config.debug_mode = True
    if no_colors:
        config.ui.enable_colors = False
        console.no_color = True

    ctx.obj["config"] = config
    ctx.obj["logger"] = setup_logging("crow-cli", config)
    ctx.obj["logger"].log_configuration()

    if ctx.invoked_subcommand is None:
        print_banner()
        click.echo(ctx.get_help())


@cli.command(name="list")
def list_command():
    """List the figure presets."""
    from ..core.scenarios import list_presets

    table = Table(title="Presets", show_header=True, header_style="bold magenta", box=ROUNDED, border_style="cyan")
    table.add_column("Preset", style="cyan bold")
    table.add_column("Figure", style="white")
    table.add_column("Regime", style="magenta")
    table.add_column("Description", style="dim white")
    for preset in list_presets():
        table.add_row(preset.name, preset.figure, preset.regime, preset.description)
    console.print(table)


@cli.command()
@click.argument("target")
@click.option("--set", "settings", multiple=True, metavar="KEY=VALUE", help="Override a configuration value")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--workers", type=int, help="Concurrent runs")
@click.option("--method", type=str, help="exact, weak, oracle or all (comma lists allowed)")
@click.option("--dt", type=float, help="Time step in units of 1/omega0")
@click.option("--tmax", type=float, help="Final time in units of 1/omega0")
@click.pass_context
def run(ctx, target: str, settings, out: Optional[Path], workers: Optional[int], method, dt, tmax):
    """Run a preset or scenario file and write its artifacts."""
    from ..core.run_orchestrator import run_scenario

    config = ctx.obj["config"]
    try:
        scenario = resolve_scenario(target, settings, dt, tmax, method)
        output_dir = out or Path(config.output.output_dir) / scenario.name
        manifest = run_scenario(scenario, output_dir, workers, config)
    except KeyboardInterrupt:
        console.print("\n👋 Run interrupted", style="yellow")
        sys.exit(1)
    except Exception as e:
        _fail(e, "Run failed")
        return

    table = Table(title=f"Scenario {scenario.name}", header_style="bold magenta", box=ROUNDED, border_style="cyan")
    table.add_column("Run", style="cyan")
    table.add_column("Point", style="white")
    table.add_column("Status")
    table.add_column("E_N max", style="white")
    for result in manifest.runs:
        peaks = ", ".join(
            f"{name}={metric['E_N_max']:.4f}"
            for name, metric in result["metrics"].items()
            if metric.get("E_N_max") is not None
        )
        status = "[green]ok[/green]" if result["status"] == "ok" else "[red]failed[/red]"
        table.add_row(result["run_id"], str(result["point"] or "-"), status, peaks or "-")
    console.print(table)
    console.print(f"📁 Manifest: {manifest.path}", style="cyan")

    if not manifest.ok:
        sys.exit(1)


@cli.command()
@click.argument("target")
@click.option("--set", "settings", multiple=True, metavar="KEY=VALUE", help="Override a configuration value")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--tmax", type=float, help="Largest kernel delay")
@click.pass_context
def spectra(ctx, target: str, settings, out: Optional[Path], tmax: Optional[float]):
    """Write spectral densities and memory kernels for every run of a scenario."""
    from ..workers.simulation_worker import SimulationWorker

    config = ctx.obj["config"]
    try:
        scenario = resolve_scenario(target, settings, tmax=tmax)
        worker = SimulationWorker(config)
        if not worker.initialize(out or Path(config.output.output_dir) / scenario.name):
            sys.exit(1)
        written = []
        for run_spec in scenario.expand():
            written.extend(worker.write_spectra(run_spec, config.output.float_digits))
        worker.cleanup()
    except Exception as e:
        _fail(e, "Spectra failed")
        return

    for name in written:
        console.print(f"📄 {name}", style="cyan")
    console.print(f"✅ {len(written)} files in {worker.output_dir}", style="green")


@cli.command()
@click.argument("target")
@click.option("--set", "settings", multiple=True, metavar="KEY=VALUE", help="Override a configuration value")
@click.option("--dt", type=float, help="Time step in units of 1/omega0")
@click.option("--tmax", type=float, help="Final time in units of 1/omega0")
def validate(target: str, settings, dt, tmax):
    """Check a preset or scenario file and show the regime of each run."""
    try:
        scenario = resolve_scenario(target, settings, dt, tmax)
        runs = scenario.expand()
    except Exception as e:
        _fail(e, "Invalid scenario")
        return

    table = Table(title=f"Scenario {scenario.name}", header_style="bold magenta", box=ROUNDED, border_style="cyan")
    table.add_column("Run", style="cyan")
    table.add_column("Point", style="white")
    table.add_column("Regimes", style="magenta")
    for run_spec in runs:
        regimes = " / ".join(regime.value for regime in run_spec.config.regimes)
        table.add_row(run_spec.run_id, str(run_spec.point or "-"), regimes)
    console.print(table)
    console.print(
        f"✅ {len(runs)} run(s), {scenario.grid.n_steps} steps of dt={scenario.grid.dt:g}", style="green"
    )


@cli.command()
@click.pass_context
def config(ctx):
    """Show the current settings."""
    settings = ctx.obj["config"].to_dict()
    table = Table(title="Configuration", show_header=True, header_style="bold magenta", box=ROUNDED, border_style="cyan")
    table.add_column("Setting", style="cyan bold", width=32)
    table.add_column("Value", style="white")
    for key, value in settings.items():
        if isinstance(value, dict):
            for subkey, subvalue in value.items():
                table.add_row(f"{key}.{subkey}", str(subvalue))
        else:
            table.add_row(key, str(value))
    console.print(table)


if __name__ == "__main__":
    cli()
