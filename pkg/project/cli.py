"""Command-line runner.

    python cli.py run --config configs/fibonacci_drift.cfg [--out FILE] [--seed U64] [--paths INT] [--threads INT]
    python cli.py summarize --in FILE --out FILE [--figure FILE]

Exit codes: 0 success, 2 invalid config or input schema, 3 every path ran out of budget.
"""
from dataclasses import replace
from typing import List, Optional
import logging
import sys

import click

import config
from utils.errors import ConfigError, SampleError
from utils.experiment_config import ExperimentConfig, print_config, read_config, run_experiment, validate_config
from utils.figures import write_figure_json
from utils.results import read_series_csv, render_series_csv, summarize_rows, write_series_csv, write_summary_csv
from utils.walk_engine import EstimateSeries

logger = logging.getLogger(__name__)

EXIT_INVALID = 2
EXIT_EXHAUSTED = 3


def header_comments(series: EstimateSeries, experiment: ExperimentConfig) -> List[str]:
    """Run metadata and the resolved config, emitted as ``#`` lines above the CSV body."""
    comments = [f"{key}: {value}" for key, value in sorted(series.metadata.items())]
    comments.append("resolved config:")
    comments.append(print_config(experiment).rstrip("\n"))
    return comments


def single_report(series: EstimateSeries) -> Optional[str]:
    """One-line summary of a distance or stretch report; None for walk experiments."""
    values = {record.estimator: record.value for record in series.records}
    if series.experiment == "distance":
        return f"dist = {values['dist']:.6f}, sym = {values['sym_dist']:.6f}"
    if series.experiment == "stretch":
        return (f"lower = {values['lower']:.6f}, upper = {values['upper']:.6f}, point = {values['point']:.6f}, "
                f"converged = {bool(values['converged'])}, k_used = {int(values['k_used'])}"
                + (f", agreement = {values['agreement']:.2%}" if "agreement" in values else ""))
    return None


def all_truncated(series: EstimateSeries) -> bool:
    """Whether every path of a walk experiment was truncated by its budget."""
    path_ids = series.path_ids()
    return bool(path_ids) and series.truncated_paths() == path_ids


@click.group()
@click.option("--log-level", default=config.LOG_LEVEL, show_default=True, help="Logging level.")
def cli(log_level: str) -> None:
    """Monte Carlo laboratory for random walks on Out(F_N) and integer matrix groups."""
    config.configure_logging(log_level.upper())


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Experiment config file.")
@click.option("--out", "out_path", default=None, help="Series CSV path; defaults to the config's out key, else stdout.")
@click.option("--seed", type=int, default=None, help="Override master_seed (unsigned 64-bit).")
@click.option("--paths", type=int, default=None, help="Override the number of paths.")
@click.option("--threads", type=int, default=config.DEFAULT_THREADS, show_default=True,
              help="Worker processes; never changes the output.")
def run(config_path: str, out_path: Optional[str], seed: Optional[int], paths: Optional[int], threads: int) -> None:
    """Run one experiment and write its series CSV."""
    try:
        experiment = read_config(config_path)
        overrides = {}
        if seed is not None:
            overrides["master_seed"] = seed
        if paths is not None:
            overrides["paths"] = paths
        if overrides:
            experiment = validate_config(replace(experiment, **overrides))
        if threads < 1:
            raise ConfigError("must be at least 1", field="threads")
    except ConfigError as e:
        logger.error(f"Invalid config {config_path}: {str(e)}")
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_INVALID)

    try:
        series = run_experiment(experiment, threads=threads)
    except SampleError as e:
        logger.error(f"Experiment {experiment.kind} produced no usable sample: {str(e)}")
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_EXHAUSTED)

    report = single_report(series)
    if report:
        click.echo(report)
    comments = header_comments(series, experiment)
    target = out_path or experiment.out
    if target:
        write_series_csv(target, series.rows(), comments)
    elif not report:
        click.echo(render_series_csv(series.rows(), comments), nl=False)

    if all_truncated(series):
        logger.error("Every path exhausted its budget before producing an estimate")
        click.echo("error: every path was truncated by the letter or bit budget", err=True)
        sys.exit(EXIT_EXHAUSTED)


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False), help="Series CSV from `run`.")
@click.option("--out", "out_path", required=True, help="Aggregate CSV path.")
@click.option("--figure", "figure_path", default=None, help="Also write a Plotly figure (JSON) of the aggregates.")
def summarize(in_path: str, out_path: str, figure_path: Optional[str]) -> None:
    """Aggregate a series CSV per (experiment, n, estimator)."""
    try:
        rows = read_series_csv(in_path)
    except (ConfigError, OSError) as e:
        logger.error(f"Cannot summarize {in_path}: {str(e)}")
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_INVALID)
    aggregates = summarize_rows(rows)
    write_summary_csv(out_path, aggregates)
    if figure_path:
        write_figure_json(aggregates, figure_path)


if __name__ == "__main__":
    cli()
