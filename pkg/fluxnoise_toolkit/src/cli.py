"""Command line interface for the flux-noise toolkit."""

import functools
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from .analyzer import FluxNoiseAnalyzer
from .config import get_settings, load_config, load_env_file
from .utils import EXIT_UNEXPECTED, FluxNoiseError, exit_code_for, format_error_message

console = Console()
logger = logging.getLogger(__name__)


def setup_logging(log_level: str = "INFO") -> None:
    """Setup logging with rich handler."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_time=False, show_path=False)],
        force=True,
    )


def _guarded(command: Callable) -> Callable:
    """Turn toolkit errors into categorized exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except (FluxNoiseError, ValueError) as e:
            code = exit_code_for(e)
            logger.error(format_error_message(e, command.__name__.replace("_", "-")))
            console.print(f"[bold red]Error:[/bold red] {e}")
            sys.exit(code)
        except Exception as e:
            logger.error(format_error_message(e, command.__name__.replace("_", "-")))
            console.print(f"[bold red]Unexpected error:[/bold red] {e}")
            sys.exit(EXIT_UNEXPECTED)

    return wrapper


def _analyzer(config_path: str, output: Optional[str]) -> FluxNoiseAnalyzer:
    config = load_config(config_path)
    return FluxNoiseAnalyzer(config, get_settings(), Path(output) if output else None)


config_option = click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
                             help="YAML run configuration")
output_option = click.option("--output", "-o", type=click.Path(file_okay=False),
                             help="Artifact directory (overrides the config and FLUXNOISE_OUTPUT_DIR)")


def xi_options(command: Callable) -> Callable:
    command = click.option("--points", type=int, help="Number of log-spaced correlation lengths")(command)
    command = click.option("--xi-max", type=float, help="Largest correlation length in metres")(command)
    command = click.option("--xi-min", type=float, help="Smallest correlation length in metres")(command)
    return command


@click.group()
@click.option("--log-level", default=None,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Set logging level (default: FLUXNOISE_LOG_LEVEL or INFO)")
@click.option("--env-file", type=click.Path(exists=True, dir_okay=False),
              help="Path to a .env file with FLUXNOISE_* settings")
def cli(log_level: Optional[str], env_file: Optional[str]) -> None:
    """Flux-noise toolkit - spatially correlated flux noise in SQUID loops and its qubit dephasing."""
    if env_file:
        load_env_file(Path(env_file))
    else:
        load_env_file()
    setup_logging(log_level or get_settings().log_level)


def _summary_table(title: str, rows) -> Table:
    table = Table(title=title, show_header=True)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for name, value in rows:
        table.add_row(name, value)
    return table


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.6g}"
    return str(value)


@cli.command()
@config_option
@output_option
@xi_options
@_guarded
def variance(config_path: str, output: Optional[str], xi_min: Optional[float], xi_max: Optional[float],
             points: Optional[int]) -> None:
    """Flux variance <Phi^2> over correlation lengths."""
    analyzer = _analyzer(config_path, output)
    with console.status("[bold green]Integrating flux variance...", spinner="dots"):
        frame = analyzer.variance(xi_min, xi_max, points)
    failed = int((frame["failure"] != "").sum())
    console.print(_summary_table("Variance sweep", [
        ("Geometry", analyzer.config.geometry.kind.value),
        ("Points", str(len(frame))),
        ("Failed points", str(failed)),
    ]))


@cli.command()
@config_option
@output_option
@xi_options
@_guarded
def suppression(config_path: str, output: Optional[str], xi_min: Optional[float], xi_max: Optional[float],
                points: Optional[int]) -> None:
    """Suppression factor S(xi) of the gradiometric pair."""
    analyzer = _analyzer(config_path, output)
    with console.status("[bold green]Computing suppression factors...", spinner="dots"):
        frame = analyzer.suppression(xi_min, xi_max, points)
    console.print(_summary_table("Suppression sweep", [
        ("Separation d (m)", _fmt(analyzer.config.geometry.separation)),
        ("Points", str(len(frame))),
        ("S at smallest xi", _fmt(float(frame["s_factor"].iloc[0]))),
        ("S at largest xi", _fmt(float(frame["s_factor"].iloc[-1]))),
    ]))


@cli.command("spectrum-curve")
@config_option
@output_option
@_guarded
def spectrum_curve(config_path: str, output: Optional[str]) -> None:
    """Transition frequency f01 against flux bias."""
    analyzer = _analyzer(config_path, output)
    frame = analyzer.spectrum_curve()
    console.print(_summary_table("Spectrum curve", [
        ("Points", str(len(frame))),
        ("Max f01 (GHz)", _fmt(float(frame["f01_ghz"].max()))),
    ]))


@cli.command()
@config_option
@output_option
@_guarded
def ramsey(config_path: str, output: Optional[str]) -> None:
    """Ramsey envelope at the configured bias point."""
    analyzer = _analyzer(config_path, output)
    result = analyzer.ramsey()
    console.print(_summary_table("Ramsey envelope", [
        ("Bias (Phi0)", _fmt(result["phi"])),
        ("T2* (us)", _fmt(result["t2_star_s"] * 1e6)),
    ]))


@cli.command("t2star-curve")
@config_option
@output_option
@_guarded
def t2star_curve(config_path: str, output: Optional[str]) -> None:
    """T2* against flux bias."""
    analyzer = _analyzer(config_path, output)
    frame = analyzer.t2star_curve()
    console.print(_summary_table("T2* curve", [
        ("Points", str(len(frame))),
        ("Sweet-spot T2* (us)", _fmt(float(frame["t2_star_us"].max()))),
    ]))


@cli.command()
@config_option
@output_option
@click.option("--data", required=True, type=click.Path(dir_okay=False),
              help="Measured T2* dataset CSV")
@click.option("--two-param", is_flag=True, help="Fit Gamma0 together with sigma_phi")
@_guarded
def fit(config_path: str, output: Optional[str], data: str, two_param: bool) -> None:
    """Fit sigma_phi (and Gamma0) to a measured T2* curve."""
    analyzer = _analyzer(config_path, output)
    dataset = analyzer.load_dataset(Path(data))
    with console.status("[bold green]Scanning error landscape...", spinner="dots"):
        outcome = analyzer.fit(dataset, two_param=two_param)

    console.print(Panel.fit(
        f"[bold blue]Fit outcome[/bold blue]\n"
        f"sigma_phi = [green]{outcome.sigma_phi_hat:.4e}[/green] Phi0\n"
        + (f"Gamma0 = [green]{outcome.gamma0_hat:.4e}[/green] 1/s\n" if outcome.two_parameter else "")
        + f"Err = {outcome.err_min:.4e} s^2",
        border_style="yellow" if outcome.boundary_warning else "blue",
    ))
    if outcome.boundary_warning:
        console.print("[yellow]Optimum on the grid boundary; widen the fit grid[/yellow]")


@cli.command()
@config_option
@output_option
@_guarded
def montecarlo(config_path: str, output: Optional[str]) -> None:
    """Monte Carlo estimate of <Phi^2> checked against the analytic value."""
    analyzer = _analyzer(config_path, output)
    with console.status("[bold green]Sampling magnetization fields...", spinner="dots"):
        payload = analyzer.montecarlo()
    console.print(_summary_table("Monte Carlo", [
        ("<Phi^2> (MC)", _fmt(payload["mean_sq"])),
        ("Standard error", _fmt(payload["std_error"])),
        ("<Phi^2> (analytic)", _fmt(payload["analytic_variance"])),
        ("z-score", _fmt(payload["z_score"])),
    ]))


@cli.command()
@config_option
@click.option("--data", "datasets", multiple=True, type=click.Path(dir_okay=False),
              help="Dataset CSV to check (repeatable)")
@_guarded
def validate(config_path: str, datasets: Tuple[str, ...]) -> None:
    """Check a config (and datasets) without computing anything."""
    config = load_config(config_path)
    summary = FluxNoiseAnalyzer(config, get_settings()).validate([Path(p) for p in datasets])
    rows = [("Config hash", summary["config_hash"][:16]),
            ("Defaults applied", str(len(summary["applied_defaults"])))]
    for path, info in summary["datasets"].items():
        rows.append((Path(path).name, f"{info['points']} points"))
    console.print(_summary_table("Validation passed", rows))


@cli.command()
def version() -> None:
    """Show version information."""
    from .. import __version__
    console.print(f"fluxnoise-toolkit v{__version__}")


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI invocation and return its exit status instead of exiting."""
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="fluxnoise-toolkit",
                 standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return EXIT_UNEXPECTED
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_UNEXPECTED
    return 0


if __name__ == "__main__":
    sys.exit(run_command())
