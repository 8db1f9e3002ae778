#!/usr/bin/env python3
"""
PiteLens - Unified CLI Interface.

Subcommands:
    run      Run a benchmark grid from a YAML config
    verify   Check the metric identities
    report   Build report tables from a run directory
    version  Print the package version

Exit codes: 0 success, 1 validation error, 2 identity-suite failure, 3 I/O error.
"""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

import pitelens
from pitelens.core.identity_suite import run_identity_suite
from pitelens.core.report_generator import ReportGenerator
from pitelens.core.run_orchestrator import RunOrchestrator
from pitelens.utils.config_utils import load_run_config, resolve_output_dir
from pitelens.utils.errors import (
    ConfigValidationError,
    InvalidParameterError,
    ResultsIOError,
)
from pitelens.utils.logger import set_log_level

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IDENTITY = 2
EXIT_IO = 3

app = typer.Typer(
    name="pitelens",
    help="PiteLens - Benchmark predicted individual treatment effect estimators on simulated trials",
    add_completion=False,
)

console = Console()

LOG_LEVEL_OPTION = typer.Option("WARNING", "--log-level", help="Logging level (DEBUG, INFO, WARNING, ERROR)")


def _fail(message: str, code: int) -> None:
    console.print(f"[red]Error: {message}[/red]")
    raise typer.Exit(code)


@app.callback(invoke_without_command=True)
def main(ctx: typer.Context):
    """PiteLens command-line interface."""
    if ctx.invoked_subcommand is not None:
        return
    table = Table(title="PiteLens commands", show_header=True, header_style="bold cyan")
    table.add_column("Command", style="green")
    table.add_column("Description")
    table.add_row("pitelens run --config FILE", "Run a benchmark grid and write the run directory")
    table.add_row("pitelens verify", "Check the metric identities and print their gaps")
    table.add_row("pitelens report RESULTS_DIR", "Write failure, success and complexity tables")
    table.add_row("pitelens version", "Print the package version")
    console.print(table)


@app.command()
def run(
    config: Path = typer.Option(..., "--config", help="Path to run config YAML file"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Override the configured worker count"),
    output_dir: Optional[str] = typer.Option(None, "--output-dir", help="Override the output directory"),
    log_level: str = LOG_LEVEL_OPTION,
):
    """Run the benchmark grid described by a config file."""
    set_log_level(log_level)
    console.print(
        Panel.fit(
            "[bold green]PITE Benchmark Run[/bold green]\n" f"[dim]Config: {config}[/dim]",
            border_style="green",
        )
    )

    try:
        run_config = load_run_config(config)
        if workers is not None and workers < 1:
            raise ConfigValidationError([f"workers: must be a positive integer, got {workers}"])
        out = resolve_output_dir(run_config, output_dir)
        result = RunOrchestrator(run_config, out, config_path=config).run(workers=workers)
    except ConfigValidationError as e:
        console.print("[red]Config validation failed:[/red]")
        for message in e.errors:
            console.print(f"  [red]✗[/red] {message}")
        raise typer.Exit(EXIT_VALIDATION)
    except InvalidParameterError as e:
        _fail(str(e), EXIT_VALIDATION)
    except ResultsIOError as e:
        _fail(str(e), EXIT_IO)

    console.print(f"[green]✓ {len(result.rows)} result rows written to {out}[/green]")
    if result.n_failed:
        console.print(f"[yellow]⚠ {result.n_failed} learner fits failed (recorded as failed rows)[/yellow]")


@app.command()
def verify(
    seed: int = typer.Option(0, "--seed", help="Seed of the random identity instances"),
    inject_fault: Optional[str] = typer.Option(None, "--inject-fault", hidden=True),
    instances: int = typer.Option(1000, "--instances", hidden=True),
    mc_replications: int = typer.Option(10_000, "--mc-replications", hidden=True),
    log_level: str = LOG_LEVEL_OPTION,
):
    """Run the metric identity suites and print each gap against its tolerance."""
    set_log_level(log_level)
    try:
        checks = run_identity_suite(
            master_seed=seed,
            inject_fault=inject_fault,
            instances=instances,
            mc_replications=mc_replications,
        )
    except InvalidParameterError as e:
        _fail(str(e), EXIT_VALIDATION)

    table = Table(title="Metric identities", show_header=True, header_style="bold cyan")
    table.add_column("Identity")
    table.add_column("Gap", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Status")
    for check in checks:
        status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.name, f"{check.gap:.3e}", f"{check.tolerance:.3e}", status)
    console.print(table)

    failed = [c.name for c in checks if not c.passed]
    if failed:
        console.print(f"[red]✗ Violated identities: {', '.join(failed)}[/red]")
        raise typer.Exit(EXIT_IDENTITY)
    console.print(f"[green]✓ All {len(checks)} identity checks passed[/green]")


@app.command()
def report(
    results_dir: Path = typer.Argument(..., help="Run directory written by 'pitelens run'"),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", help="Report directory (default: RESULTS_DIR/report)"),
    log_level: str = LOG_LEVEL_OPTION,
):
    """Build failure tables, success matrices, scatter data and complexity tables."""
    set_log_level(log_level)
    try:
        written = ReportGenerator(results_dir, output_dir).generate()
    except ResultsIOError as e:
        _fail(str(e), EXIT_IO)

    console.print(f"[green]✓ Wrote {len(written)} report files[/green]")
    for name, path in written.items():
        console.print(f"  [dim]{name}:[/dim] {path}")


@app.command()
def version():
    """Print the package version."""
    console.print(f"pitelens {pitelens.__version__}")


if __name__ == "__main__":
    app()
