from typing import Dict, List, Optional, Union
import logging
import math

from flask import Blueprint, Response, jsonify, request

import config
from utils.errors import ConfigError, LabError, SampleError, WordParseError
from utils.experiment_config import parse_config, print_config, run_experiment
from utils.figures import build_summary_figure
from utils.free_group import parse_automorphism
from utils.results import AggregateRow, ResultRow, summarize_rows
from utils.walk_engine import distance_report, stretch_report
from db.database import get_all_runs, get_run, get_run_records, store_records, store_run

logger = logging.getLogger(__name__)

api_bp = Blueprint("api", __name__)


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def _row_json(row: ResultRow) -> Dict[str, Union[int, str, float, None]]:
    return {"path_id": row.path_id, "n": row.n, "estimator": row.estimator,
            "value": _finite(row.value), "status": row.status}


def _aggregate_json(row: AggregateRow) -> Dict[str, Union[int, str, float, None]]:
    return {
        "experiment": row.experiment, "n": row.n, "estimator": row.estimator,
        "mean": _finite(row.mean), "median": _finite(row.median),
        "ci_low": _finite(row.ci_low), "ci_high": _finite(row.ci_high),
        "effective_paths": row.effective_paths,
    }


def _query_automorphism():
    image_text = request.args.get("map")
    inverse_text = request.args.get("inv")
    if not image_text or not inverse_text:
        raise ConfigError("both map and inv query parameters are required", field="map")
    return parse_automorphism(f"{image_text} | {inverse_text}")


@api_bp.route("/experiments", methods=["POST"])
def create_experiment() -> Dict[str, Union[str, int, List[Dict[str, Union[int, str, float, None]]]]]:
    """Run an experiment from config text in the request body and store its rows.

    Returns:
        Dict[str, Union[str, int, List[...]]]: JSON response with the run id and aggregates, or an error message.
    """
    payload = request.get_json(silent=True)
    config_text = payload.get("config") if isinstance(payload, dict) else request.get_data(as_text=True)
    if not config_text:
        logger.error("No experiment config provided in request")
        return jsonify({"error": "No experiment config provided"}), 400

    try:
        threads = int(request.args.get("threads", config.DEFAULT_THREADS))
        experiment = parse_config(config_text)
    except ValueError as e:
        logger.error(f"Invalid experiment config: {str(e)}")
        return jsonify({"error": f"Invalid experiment config: {str(e)}"}), 400

    try:
        series = run_experiment(experiment, threads=max(threads, 1))
    except SampleError as e:
        logger.error(f"Experiment {experiment.kind} produced no usable sample: {str(e)}")
        return jsonify({"error": f"Experiment produced no usable sample: {str(e)}"}), 422
    except Exception as e:
        logger.error(f"Error running experiment {experiment.kind}: {str(e)}")
        return jsonify({"error": f"Error running experiment: {str(e)}"}), 500

    path_ids = series.path_ids()
    status = "truncated" if path_ids and series.truncated_paths() == path_ids else "ok"
    rows = series.rows()
    run_id = store_run(experiment.kind, experiment.master_seed, print_config(experiment), status)
    if not run_id or store_records(run_id, rows) != len(rows):
        logger.error(f"Failed to store run of kind {experiment.kind}")
        return jsonify({"error": "Failed to store experiment results"}), 500

    logger.info(f"Stored run {run_id}: kind={experiment.kind}, {len(rows)} records, status={status}")
    return jsonify({
        "message": "Experiment completed",
        "run_id": run_id,
        "kind": experiment.kind,
        "status": status,
        "summary": [_aggregate_json(row) for row in summarize_rows(rows)],
    })


@api_bp.route("/runs", methods=["GET"])
def list_runs() -> Dict[str, List[Dict[str, Union[int, str]]]]:
    """Retrieve all stored runs.

    Returns:
        Dict[str, List[Dict[str, Union[int, str]]]]: JSON response with run summaries or error message.
    """
    try:
        runs = get_all_runs()
        logger.info(f"Retrieved {len(runs)} runs from database")
        return jsonify({"runs": runs})
    except Exception as e:
        logger.error(f"Error retrieving runs: {str(e)}")
        return jsonify({"error": f"Error retrieving runs: {str(e)}"}), 500


@api_bp.route("/runs/<int:run_id>/records", methods=["GET"])
def run_records(run_id: int) -> Dict[str, Union[int, List[Dict[str, Union[int, str, float, None]]]]]:
    """Retrieve the series rows of one run."""
    if get_run(run_id) is None:
        logger.warning(f"No run found with ID: {run_id}")
        return jsonify({"error": f"No run found with ID: {run_id}"}), 404
    rows = get_run_records(run_id)
    return jsonify({"run_id": run_id, "records": [_row_json(row) for row in rows]})


@api_bp.route("/runs/<int:run_id>/summary", methods=["GET"])
def run_summary(run_id: int) -> Dict[str, Union[int, List[Dict[str, Union[int, str, float, None]]]]]:
    """Per-n aggregates of one run (mean, median, batch-means CI, effective paths)."""
    if get_run(run_id) is None:
        logger.warning(f"No run found with ID: {run_id}")
        return jsonify({"error": f"No run found with ID: {run_id}"}), 404
    try:
        aggregates = summarize_rows(get_run_records(run_id))
        logger.info(f"Summarized run {run_id} into {len(aggregates)} aggregate rows")
        return jsonify({"run_id": run_id, "summary": [_aggregate_json(row) for row in aggregates]})
    except Exception as e:
        logger.error(f"Error summarizing run {run_id}: {str(e)}")
        return jsonify({"error": f"Error summarizing run: {str(e)}"}), 500


@api_bp.route("/runs/<int:run_id>/figure", methods=["GET"])
def run_figure(run_id: int) -> Response:
    """Plotly figure JSON of one run's aggregates."""
    if get_run(run_id) is None:
        logger.warning(f"No run found with ID: {run_id}")
        return jsonify({"error": f"No run found with ID: {run_id}"}), 404
    try:
        figure = build_summary_figure(summarize_rows(get_run_records(run_id)), title=f"Run {run_id}")
        return Response(figure.to_json(), mimetype="application/json")
    except Exception as e:
        logger.error(f"Error building figure for run {run_id}: {str(e)}")
        return jsonify({"error": f"Error building figure: {str(e)}"}), 500


@api_bp.route("/distance", methods=["GET"])
def distance_endpoint() -> Dict[str, Union[str, float]]:
    """dist and sym_dist of the automorphism given by ``map`` and ``inv``."""
    try:
        theta = _query_automorphism()
        values = {r.estimator: r.value for r in distance_report(theta).records}
        return jsonify({"automorphism": str(theta), "dist": values["dist"], "sym_dist": values["sym_dist"]})
    except (ConfigError, WordParseError) as e:
        logger.error(f"Invalid automorphism: {str(e)}")
        return jsonify({"error": f"Invalid automorphism: {str(e)}"}), 400
    except LabError as e:
        logger.error(f"Error computing distance: {str(e)}")
        return jsonify({"error": f"Error computing distance: {str(e)}"}), 500


@api_bp.route("/stretch", methods=["GET"])
def stretch_endpoint() -> Dict[str, Union[str, float, int, bool, None]]:
    """Standalone stretch bracket of the automorphism given by ``map`` and ``inv``."""
    try:
        phi = _query_automorphism()
        k_max = int(request.args.get("k_max", config.STANDALONE_K_MAX))
        if k_max < 1:
            raise ConfigError("must be at least 1", field="k_max")
    except ValueError as e:
        logger.error(f"Invalid stretch request: {str(e)}")
        return jsonify({"error": f"Invalid stretch request: {str(e)}"}), 400
    try:
        values = {r.estimator: r.value for r in stretch_report(phi, k_max).records}
        return jsonify({
            "automorphism": str(phi),
            "lower": _finite(values["lower"]),
            "upper": _finite(values["upper"]),
            "point": _finite(values["point"]),
            "converged": bool(values["converged"]),
            "k_used": int(values["k_used"]),
        })
    except LabError as e:
        logger.error(f"Error computing stretch bracket: {str(e)}")
        return jsonify({"error": f"Error computing stretch bracket: {str(e)}"}), 500
