"""Result rows, CSV emission and batch-means aggregates.

Series CSV: optional ``#`` comment header (run metadata and the resolved
config), then exactly ``experiment,path_id,n,estimator,value,status``.

Aggregate CSV: ``experiment,n,estimator,mean,median,ci_low,ci_high,effective_paths``.
The confidence interval uses batch means over path_id: the paths, ordered by
path_id, are cut into a = ⌊P/b⌋ consecutive batches of b = ⌊√P⌋ paths; with
batch means m_1..m_a and their sample variance s², the 95% half-width is
t_{0.975, a−1}·√(s²/a). Fewer than two batches leave the interval empty.
"""
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import csv
import io
import logging
import math

import numpy as np
from scipy import stats

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

SERIES_HEADER = ["experiment", "path_id", "n", "estimator", "value", "status"]
AGGREGATE_HEADER = ["experiment", "n", "estimator", "mean", "median", "ci_low", "ci_high", "effective_paths"]
STATUSES = ("ok", "truncated", "downgraded")
AGGREGATE_PATH_ID = -1


@dataclass(frozen=True)
class ResultRow:
    """One CSV record; path_id -1 marks a statistic of the whole sample."""
    experiment: str
    path_id: int
    n: int
    estimator: str
    value: float
    status: str = "ok"

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")


@dataclass(frozen=True)
class AggregateRow:
    experiment: str
    n: int
    estimator: str
    mean: float
    median: float
    ci_low: Optional[float]
    ci_high: Optional[float]
    effective_paths: int


def format_value(value: Optional[float]) -> str:
    """Shortest round-trip representation; empty for a missing value."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def batch_means_ci(values: Sequence[float], confidence: float = 0.95) -> Optional[Tuple[float, float]]:
    """Batch-means confidence interval for the mean of per-path values.

    Args:
        values: Per-path values ordered by path_id.
        confidence: Two-sided confidence level.

    Returns:
        Optional[Tuple[float, float]]: (low, high), or None with fewer than two batches.
    """
    data = np.asarray(values, dtype=float)
    size = int(math.floor(math.sqrt(len(data)))) if len(data) else 0
    if size == 0:
        return None
    batches = len(data) // size
    if batches < 2:
        return None
    batch_means = data[:batches * size].reshape(batches, size).mean(axis=1)
    spread = float(np.var(batch_means, ddof=1))
    half_width = float(stats.t.ppf(0.5 + confidence / 2, batches - 1)) * math.sqrt(spread / batches)
    center = float(data.mean())
    return center - half_width, center + half_width


def summarize_rows(rows: Iterable[ResultRow]) -> List[AggregateRow]:
    """Per-(experiment, n, estimator) mean, median, batch-means CI and effective path count.

    Only finite values with status ok or downgraded enter the aggregates;
    sample-level rows (path_id -1) are passed through as single values.
    """
    groups: Dict[Tuple[str, int, str], List[Tuple[int, float]]] = defaultdict(list)
    for row in rows:
        if row.status == "truncated" or not math.isfinite(row.value):
            continue
        groups[(row.experiment, row.n, row.estimator)].append((row.path_id, row.value))
    aggregates = []
    for (experiment, n, estimator), entries in sorted(groups.items()):
        values = [value for _, value in sorted(entries)]
        interval = batch_means_ci(values)
        aggregates.append(AggregateRow(
            experiment=experiment,
            n=n,
            estimator=estimator,
            mean=float(np.mean(values)),
            median=float(np.median(values)),
            ci_low=None if interval is None else interval[0],
            ci_high=None if interval is None else interval[1],
            effective_paths=len(values),
        ))
    logger.debug(f"Summarized {len(aggregates)} (experiment, n, estimator) groups")
    return aggregates


def render_series_csv(rows: Sequence[ResultRow], comments: Sequence[str] = ()) -> str:
    """Series CSV text, with each comment line prefixed by ``# `` above the header."""
    buffer = io.StringIO()
    for comment in comments:
        for line in comment.splitlines() or [""]:
            buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SERIES_HEADER)
    for row in rows:
        writer.writerow([row.experiment, row.path_id, row.n, row.estimator, format_value(row.value), row.status])
    return buffer.getvalue()


def write_series_csv(path: str, rows: Sequence[ResultRow], comments: Sequence[str] = ()) -> None:
    """Write the series CSV of ``rows`` to ``path``.

    Args:
        path: Output file.
        rows: Per-path result rows.
        comments: Run metadata echoed as ``#`` lines.
    """
    with open(path, "w", newline="") as handle:
        handle.write(render_series_csv(rows, comments))
    logger.info(f"Wrote {len(rows)} result rows to {path}")


def parse_series_csv(text: str) -> List[ResultRow]:
    """Parse a series CSV, skipping ``#`` comment lines.

    Raises:
        ConfigError: If the header or a row does not match the schema.
    """
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != SERIES_HEADER:
        raise ConfigError(f"expected header {','.join(SERIES_HEADER)}, got {header}", field="header")
    rows = []
    for line_number, record in enumerate(reader, start=2):
        if len(record) != len(SERIES_HEADER):
            raise ConfigError(f"row {line_number} has {len(record)} fields", field="row")
        experiment, path_id, n, estimator, value, status = record
        try:
            rows.append(ResultRow(experiment, int(path_id), int(n), estimator,
                                  float(value) if value else math.nan, status))
        except ValueError as e:
            raise ConfigError(f"row {line_number}: {e}", field="row") from e
    return rows


def read_series_csv(path: str) -> List[ResultRow]:
    """Read a series CSV file.

    Raises:
        ConfigError: If the contents do not match the schema.
        OSError: If the file cannot be read.
    """
    with open(path, newline="") as handle:
        return parse_series_csv(handle.read())


def render_summary_csv(aggregates: Sequence[AggregateRow]) -> str:
    """Aggregate CSV text, one row per (experiment, n, estimator)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(AGGREGATE_HEADER)
    for row in aggregates:
        writer.writerow([
            row.experiment, row.n, row.estimator,
            format_value(row.mean), format_value(row.median),
            format_value(row.ci_low), format_value(row.ci_high),
            row.effective_paths,
        ])
    return buffer.getvalue()


def write_summary_csv(path: str, aggregates: Sequence[AggregateRow]) -> None:
    """Write the aggregate CSV to ``path``."""
    with open(path, "w", newline="") as handle:
        handle.write(render_summary_csv(aggregates))
    logger.info(f"Wrote {len(aggregates)} aggregate rows to {path}")
