#!/usr/bin/env python3
"""CLI interface for the SUTA toolkit."""

import json
import sys
from pathlib import Path
from typing import Any, Callable

import click
from rich.console import Console
from rich.table import Table

from src.adapt import AdaptMethod
from src.harness import (
    ExperimentConfig,
    cmd_adapt,
    cmd_calibrate,
    cmd_gen_corpus,
    cmd_length_analysis,
    cmd_sweep,
    cmd_train,
)
from src.model import ParamSelection
from src.utils.config import config
from src.utils.errors import error_record
from src.utils.logger import get_logger, setup_logging

console = Console()
err_console = Console(stderr=True)
logger = get_logger(__name__)


def experiment_options(func: Callable) -> Callable:
    """Options every subcommand accepts."""
    options = [
        click.option('--config', 'config_path', type=click.Path(path_type=Path), default=None,
                     help='Experiment JSON (default: $SUTA_EXPERIMENT_CONFIG)'),
        click.option('--out', 'output_dir', type=click.Path(path_type=Path), default=None,
                     help='Output directory (default: $SUTA_OUTPUT_DIR)'),
        click.option('--seed', type=int, default=None, help='Experiment seed'),
        click.option('--jobs', type=int, default=None, help='Parallel adaptation jobs'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def adapt_options(func: Callable) -> Callable:
    """Options mirroring AdaptConfig fields."""
    options = [
        click.option('--alpha', type=float, default=None, help='Entropy weight α in [0, 1]'),
        click.option('--temperature', type=float, default=None, help='Smoothing temperature T >= 1'),
        click.option('--iters', 'iterations', type=int, default=None, help='Adaptation iterations N'),
        click.option('--params', type=click.Choice([p.value for p in ParamSelection]), default=None,
                     help='Adaptable parameter group'),
        click.option('--lr', type=float, default=None, help='Learning rate (overrides the per-group default)'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_command(name: str, command: Callable[[ExperimentConfig], Any], config_path, **overrides) -> Any:
    """Build the experiment, run a harness command, and turn failures into an error record."""
    try:
        experiment = ExperimentConfig.from_file(config_path, **overrides)
        return command(experiment)
    except Exception as e:
        err_console.print(f"[red]Error running {name}: {e}[/red]")
        logger.error(f"{name} error: {e}")
        click.echo(json.dumps(error_record(e, name), sort_keys=True))
        sys.exit(1)


@click.group()
@click.option('--debug', is_flag=True, help='Enable debug logging')
def cli(debug):
    """SUTA toolkit - single-utterance test-time adaptation for CTC models."""
    log_level = "DEBUG" if debug else config.log_level
    setup_logging(level=log_level)


@cli.command('gen-corpus')
@experiment_options
def gen_corpus(config_path, **overrides):
    """Generate train, held-out, test and dev corpora."""
    written = run_command("gen-corpus", cmd_gen_corpus, config_path, **overrides)
    for name, path in written.items():
        console.print(f"[green]✓[/green] {name}: {path}")


@cli.command()
@experiment_options
def train(config_path, **overrides):
    """Train the source model on the clean corpus."""
    path, log = run_command("train", cmd_train, config_path, **overrides)
    console.print(f"[green]✓ Saved checkpoint to {path}[/green]")
    if log.epoch_losses:
        console.print(f"Final CTC loss: {log.epoch_losses[-1]:.4f}")
    if log.heldout_wer and log.heldout_wer[-1] is not None:
        console.print(f"Held-out WER: {100 * log.heldout_wer[-1]:.2f}%")


@cli.command()
@experiment_options
@adapt_options
@click.option('--method', type=click.Choice([m.value for m in AdaptMethod]), default=None,
              help='Run only this method (plus the unadapted baseline)')
@click.option('--traces', 'save_traces', is_flag=True, default=None, help='Write per-utterance traces')
def adapt(config_path, method, **overrides):
    """Adapt to every test corpus and report WER / WERR."""
    if method is not None:
        overrides["methods"] = ["none", method]
    table = run_command("adapt", cmd_adapt, config_path, **overrides)
    display_table(table.records(), "Adaptation results")


@cli.command()
@experiment_options
@adapt_options
def sweep(config_path, **overrides):
    """Run the ablation grid on the dev corpora."""
    table = run_command("sweep", cmd_sweep, config_path, **overrides)
    display_table(table.records(), "Sweep results")


@cli.command('length-analysis')
@experiment_options
@click.option('--utterances', type=click.Path(exists=True, path_type=Path), default=None,
              help='Per-utterance CSV (default: <out>/adapt_utterances.csv)')
def length_analysis(config_path, utterances, **overrides):
    """Report WERR by utterance length."""
    report = run_command(
        "length-analysis",
        lambda experiment: cmd_length_analysis(experiment, utterances),
        config_path,
        **overrides,
    )
    display_table(report.to_dict(orient="records"), "Length buckets")


@cli.command()
@experiment_options
def calibrate(config_path, **overrides):
    """Pick the low/high noise levels from the unadapted WER."""
    record = run_command("calibrate", cmd_calibrate, config_path, **overrides)
    console.print(f"[green]✓ low δ = {record['low']:g}, high δ = {record['high']:g}[/green]")


def display_table(rows: list, title: str):
    """Display result rows as a rich table."""
    if not rows:
        console.print("[yellow]No results.[/yellow]")
        return
    table = Table(title=title)
    columns = list(rows[0])
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*[_format_cell(row[c]) for c in columns])
    console.print(table)


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return "" if value is None else str(value)


if __name__ == "__main__":
    cli()
