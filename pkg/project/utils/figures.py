from collections import defaultdict
from typing import Dict, List, Optional, Sequence
import logging
import os

import plotly.graph_objects as go

import config
from utils.results import AggregateRow

logger = logging.getLogger(__name__)


def build_summary_figure(aggregates: Sequence[AggregateRow], title: Optional[str] = None) -> go.Figure:
    """Build a Plotly figure of per-n means, one trace per (experiment, estimator).

    Error bars show the batch-means confidence interval where one exists.

    Args:
        aggregates: Rows produced by ``summarize_rows``.
        title: Figure title; defaults to the experiment names.

    Returns:
        go.Figure: Plot-ready figure (never rendered here).
    """
    traces: Dict[str, List[AggregateRow]] = defaultdict(list)
    for row in aggregates:
        traces[f"{row.experiment}:{row.estimator}"].append(row)

    fig = go.Figure()
    for name, rows in sorted(traces.items()):
        rows = sorted(rows, key=lambda row: row.n)
        plus = [0.0 if row.ci_high is None else row.ci_high - row.mean for row in rows]
        minus = [0.0 if row.ci_low is None else row.mean - row.ci_low for row in rows]
        fig.add_trace(go.Scatter(
            x=[row.n for row in rows],
            y=[row.mean for row in rows],
            mode="lines+markers",
            name=name,
            error_y=dict(type="data", symmetric=False, array=plus, arrayminus=minus),
        ))
    experiments = sorted({row.experiment for row in aggregates})
    fig.update_layout(
        title=title or f"Per-step estimates: {', '.join(experiments)}",
        xaxis_title="n",
        yaxis_title="mean over paths",
    )
    logger.debug(f"Built summary figure with {len(traces)} traces")
    return fig


def write_figure_json(aggregates: Sequence[AggregateRow], path: Optional[str] = None) -> Optional[str]:
    """Save the summary figure as Plotly JSON.

    Returns:
        Optional[str]: Path of the saved file, or None if writing failed.
    """
    try:
        output_path = path or os.path.join(config.ensure_results_folder(), "summary_figure.json")
        build_summary_figure(aggregates).write_json(output_path)
        logger.info(f"Summary figure saved to {output_path}")
        return output_path
    except (OSError, ValueError) as e:
        logger.error(f"Error writing summary figure: {str(e)}")
        return None
