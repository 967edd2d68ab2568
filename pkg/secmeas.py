#!/usr/bin/env python3
"""
Secure Measurement CLI

CLI-Programm für die vertrauliche Zustandsunterscheidung: baut die optimale
inkonklusive Messung, ihre projektive Dilatation und die Vorverarbeitung für
N Beobachter, prüft Geheimhaltung und Statistik und schreibt einen Report.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import typer
from dotenv import load_dotenv
from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from secure_measurement import (
    ConfigError,
    ProtocolError,
    ReportError,
    RunConfig,
    RunReport,
    SecureMeasurementPipeline,
    attack_sim,
    emit_report,
    load_config,
    parse_config,
)
from state_discrimination import __version__
from state_discrimination.exceptions import DimensionCapError, DiscriminationError

# Exit codes
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_RESIDUAL = 2
EXIT_CONFIG = 3
EXIT_DIMENSION_CAP = 4
EXIT_IO = 5
EXIT_INTERRUPTED = 130

# Typer App & Rich Console
app = typer.Typer(help="Confidential quantum state discrimination with N observers")
console = Console()


# ============================================================================
# Setup
# ============================================================================

def setup(config_path: Path, verbose: bool, overrides: Optional[Dict] = None) -> RunConfig:
    """
    Lädt .env und Config, wendet CLI-Overrides an und konfiguriert Logging.

    Raises:
        typer.Exit: Code 3 bei fehlender oder ungültiger Config,
            Code 5 wenn die Datei nicht gelesen werden kann
    """
    load_dotenv()

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(levelname)s: %(message)s'
    )

    console.print("\n[cyan]Loading configuration...[/cyan]")
    try:
        config = load_config(config_path)
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        if overrides:
            config = parse_config({**config.model_dump(), **overrides})
        console.print("[green]✓[/green] Configuration loaded successfully")
    except FileNotFoundError as e:
        console.print(f"[red]✗ {e}[/red]")
        raise typer.Exit(code=EXIT_CONFIG)
    except OSError as e:
        console.print(f"[red]✗ Could not read configuration: {e}[/red]")
        raise typer.Exit(code=EXIT_IO)
    except ConfigError as e:
        console.print(f"[red]✗ Configuration error:[/red]\n{e}")
        raise typer.Exit(code=EXIT_CONFIG)

    if not verbose:
        logging.getLogger().setLevel(config.logging.level)
    return config


def parse_subset(subset: str) -> List[int]:
    try:
        return [int(x) for x in subset.split(",") if x.strip()]
    except ValueError:
        raise ProtocolError(f"Subset must be a comma-separated list of observer indices, got '{subset}'")


def exit_code_for(error: Exception) -> int:
    if isinstance(error, DimensionCapError):
        return EXIT_DIMENSION_CAP
    if isinstance(error, (ReportError, OSError)):
        return EXIT_IO
    if isinstance(error, (DiscriminationError, ProtocolError, ConfigError)):
        return EXIT_CONFIG
    return EXIT_UNEXPECTED


def build_pipeline(config: RunConfig, verbose: bool) -> SecureMeasurementPipeline:
    logger = logging.getLogger(__name__)
    console.print(f"\n[cyan]Building pipeline...[/cyan]")
    console.print(f"  Group: Z_{' x Z_'.join(str(n) for n in config.group.orders)}")
    console.print(f"  Observers: {config.observers} ({config.preprocessing})")
    console.print(f"  Failure probability: {config.failure_prob}")
    try:
        pipeline = SecureMeasurementPipeline(config).build()
    except Exception as e:
        code = exit_code_for(e)
        console.print(f"[red]✗ Failed to build pipeline:[/red] {e}")
        if verbose:
            logger.exception("Pipeline error:")
        raise typer.Exit(code=code)
    console.print(
        f"[green]✓[/green] Pipeline built "
        f"(local dimension {pipeline.pmap.local_dim}, composite {pipeline.pmap.composite_dim})"
    )
    return pipeline


# ============================================================================
# Output-Formatierung
# ============================================================================

def display_probability_table(report: RunReport):
    """Zeigt die exakte Tabelle P[k|m] an"""
    exact = report.exact
    table = Table(title="Receiver Statistics P[k|m]", box=box.ROUNDED)

    table.add_column("m", style="cyan", no_wrap=True)
    for outcome in exact.outcomes:
        table.add_column(outcome, justify="right", style="white")

    for message, row in zip(exact.messages, exact.probabilities):
        table.add_row(message, *(f"{p:.6f}" for p in row))

    console.print(table)


def display_residuals(report: RunReport):
    """Zeigt alle Residuen mit Status an"""
    table = Table(title="Residuals", box=box.ROUNDED)

    table.add_column("Check", style="cyan", no_wrap=True)
    table.add_column("Value", justify="right", style="white")
    table.add_column("Tolerance", justify="right", style="dim")
    table.add_column("Status", justify="center")

    for name, entry in report.residuals.items():
        status = "[green]✓[/green]" if entry.passed else "[red]✗[/red]"
        table.add_row(name, f"{entry.value:.2e}", f"{entry.tolerance:.0e}", status)

    console.print(table)


def display_summary(report: RunReport):
    exact = report.exact
    lines = [
        f"Correct probability: {exact.avg_correct:.10f}",
        f"Failure probability: {exact.avg_failure:.10f} (target {exact.failure_target:.10f})",
        f"Minimum-error correct: {exact.me_correct:.10f} ({exact.me_method})",
        f"OIM method: {exact.oim_method}",
    ]
    if exact.unamb_threshold is not None:
        lines.append(f"Unambiguous threshold: {exact.unamb_threshold:.10f}")
    lines.append(f"Secrecy deviation: {report.residuals['secrecy'].value:.2e}")
    lines.append(f"Equivalence deviation: {report.residuals['equivalence'].value:.2e}")

    console.print(Panel(
        "\n".join(lines),
        title="[cyan]Summary[/cyan]",
        border_style="green" if report.passed else "red"
    ))


def display_monte_carlo(report: RunReport):
    section = report.monte_carlo
    if not section.entries:
        return
    table = Table(title=f"Monte Carlo ({section.trials} trials per message)", box=box.ROUNDED)

    table.add_column("m", style="cyan", no_wrap=True)
    for outcome in report.exact.outcomes:
        table.add_column(outcome, justify="right", style="white")
    table.add_column("TV", justify="right", style="yellow")

    for entry in section.entries:
        cells = [f"{f:.4f}±{s:.4f}" for f, s in zip(entry.frequencies, entry.standard_errors)]
        table.add_row(entry.message, *cells, f"{entry.tv_distance:.2e}")

    console.print(table)


def display_attacks(report: RunReport):
    if not report.attack:
        return
    table = Table(title="Coalition Attacks", box=box.ROUNDED)

    table.add_column("Observers", style="cyan", no_wrap=True)
    table.add_column("Strategy", style="white")
    table.add_column("Exact TV", justify="right", style="green")
    table.add_column("Empirical TV", justify="right", style="yellow")

    for entry in report.attack:
        empirical = f"{entry.empirical_tv:.2e}" if entry.empirical_tv is not None else "-"
        table.add_row(",".join(str(n) for n in entry.subset), entry.strategy, f"{entry.exact_tv:.2e}", empirical)

    console.print(table)


def finish(report: RunReport):
    if report.passed:
        console.print("\n[green]✓ All checks passed[/green]")
        raise typer.Exit(code=EXIT_OK)
    console.print(f"\n[red]✗ Residuals out of tolerance:[/red] {', '.join(report.failing())}")
    raise typer.Exit(code=EXIT_RESIDUAL)


# ============================================================================
# CLI Commands
# ============================================================================

@app.command()
def run(
    config_path: Path = typer.Option(..., "--config", "-c", help="Path to the run config (YAML or JSON)"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Report directory (overrides output.directory)"),
    trials: Optional[int] = typer.Option(None, "--trials", "-n", help="Monte Carlo trials per message"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="RNG seed"),
    tolerance: Optional[float] = typer.Option(None, "--tolerance", "-t", help="Tolerance for exact checks"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """
    Run the full pipeline, sample it and write the report.

    Example:
        python secmeas.py run --config config.yaml --trials 100000 --out reports
    """
    logger = logging.getLogger(__name__)
    try:
        config = setup(config_path, verbose, {'trials': trials, 'rng_seed': seed, 'tolerance': tolerance})
        pipeline = build_pipeline(config, verbose)

        if config.trials:
            console.print(f"\n[cyan]Sampling {config.trials} trials per message...[/cyan]")
        report = pipeline.run(sample=True)

        console.print()
        display_probability_table(report)
        display_summary(report)
        display_monte_carlo(report)
        display_attacks(report)
        if verbose or not report.passed:
            display_residuals(report)

        directory = out or Path(config.output.directory)
        console.print(f"\n[cyan]Writing report...[/cyan]")
        try:
            paths = emit_report(report, directory)
        except ReportError as e:
            console.print(f"[red]✗ {e}[/red]")
            raise typer.Exit(code=EXIT_IO)
        for path in paths.values():
            console.print(f"[green]✓[/green] {path}")

        finish(report)

    except typer.Exit:
        raise
    except KeyboardInterrupt:
        console.print("\n\n[yellow]⚠ Operation cancelled by user[/yellow]")
        raise typer.Exit(code=EXIT_INTERRUPTED)
    except Exception as e:
        console.print(f"\n[red]✗ Unexpected error:[/red] {e}")
        if verbose:
            logger.exception("Unexpected error:")
        raise typer.Exit(code=exit_code_for(e))


@app.command()
def attack(
    config_path: Path = typer.Option(..., "--config", "-c", help="Path to the run config (YAML or JSON)"),
    subset: str = typer.Option(..., "--subset", help="Comma-separated observer indices, e.g. 0,1"),
    strategy: str = typer.Option("random", "--strategy", help="'random' or 'file:<path>'"),
    trials: Optional[int] = typer.Option(None, "--trials", "-n", help="Sampling trials per message"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="RNG seed"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """
    Simulate a coalition of observers measuring their reduced state.

    Example:
        python secmeas.py attack --config config.yaml --subset 0 --strategy random
    """
    logger = logging.getLogger(__name__)
    try:
        config = setup(config_path, verbose, {'trials': trials, 'rng_seed': seed})
        observers = parse_subset(subset)
        pipeline = build_pipeline(config, verbose)

        console.print(f"\n[cyan]Attacking with observers {observers} ({strategy})...[/cyan]")
        result = attack_sim(pipeline, observers, strategy, config.trials, config.rng_seed)

        tolerance = pipeline.settings.tolerance
        passed = result.exact_tv <= tolerance
        lines = [
            f"Observers: {', '.join(str(n) for n in result.subset)}",
            f"Strategy: {result.strategy}",
            f"Exact leakage (max TV): {result.exact_tv:.3e}",
        ]
        if result.empirical_tv is not None:
            lines.append(f"Empirical TV ({result.trials} trials): {result.empirical_tv:.3e}")
        console.print(Panel(
            "\n".join(lines),
            title="[cyan]Attack Result[/cyan]",
            border_style="green" if passed else "red"
        ))

        if passed:
            console.print(f"\n[green]✓ No leakage beyond {tolerance:.0e}[/green]")
            raise typer.Exit(code=EXIT_OK)
        console.print(f"\n[red]✗ Leakage {result.exact_tv:.3e} exceeds {tolerance:.0e}[/red]")
        raise typer.Exit(code=EXIT_RESIDUAL)

    except typer.Exit:
        raise
    except KeyboardInterrupt:
        console.print("\n\n[yellow]⚠ Operation cancelled by user[/yellow]")
        raise typer.Exit(code=EXIT_INTERRUPTED)
    except Exception as e:
        console.print(f"\n[red]✗ Error:[/red] {e}")
        if verbose:
            logger.exception("Attack error:")
        raise typer.Exit(code=exit_code_for(e))


@app.command()
def verify(
    config_path: Path = typer.Option(..., "--config", "-c", help="Path to the run config (YAML or JSON)"),
    tolerance: Optional[float] = typer.Option(None, "--tolerance", "-t", help="Tolerance for exact checks"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose output")
):
    """
    Run the exact checks only (no sampling, no report files).

    Example:
        python secmeas.py verify --config config.yaml
    """
    logger = logging.getLogger(__name__)
    try:
        config = setup(config_path, verbose, {'tolerance': tolerance})
        pipeline = build_pipeline(config, verbose)
        report = pipeline.run(sample=False)

        console.print()
        display_probability_table(report)
        display_summary(report)
        display_residuals(report)
        finish(report)

    except typer.Exit:
        raise
    except KeyboardInterrupt:
        console.print("\n\n[yellow]⚠ Operation cancelled by user[/yellow]")
        raise typer.Exit(code=EXIT_INTERRUPTED)
    except Exception as e:
        console.print(f"\n[red]✗ Unexpected error:[/red] {e}")
        if verbose:
            logger.exception("Unexpected error:")
        raise typer.Exit(code=exit_code_for(e))


@app.command()
def version():
    """Show version information"""
    console.print(f"Secure Measurement CLI v{__version__}")


if __name__ == "__main__":
    app()
