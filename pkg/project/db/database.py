from typing import Dict, List, Optional, Sequence, Union
import logging
import math

from flask import Flask
from sqlalchemy import text
from sqlalchemy.exc import SQLAlchemyError

from utils.results import ResultRow
from .models import db, ExperimentRun, ResultRecord

logger = logging.getLogger(__name__)


def initialize_database(app: Flask) -> None:
    """Initialize the database with the Flask application.

    Args:
        app: Flask application instance.

    Raises:
        SQLAlchemyError: If database connection or table creation fails.
    """
    db.init_app(app)
    with app.app_context():
        try:
            db.session.execute(text("SELECT 1"))
            logger.info("Database connection established successfully")
            db.create_all()
            logger.info("Database tables initialized")
        except SQLAlchemyError as e:
            logger.error(f"Failed to initialize database: {str(e)}")
            raise


def store_run(kind: str, master_seed: int, config_text: str, status: str = "ok") -> Optional[int]:
    """Store an experiment run.

    Returns:
        Optional[int]: ID of the stored run, or None if storage fails.
    """
    try:
        run = ExperimentRun(kind=kind, master_seed=str(master_seed), config_text=config_text, status=status)
        db.session.add(run)
        db.session.commit()
        logger.debug(f"Stored run kind={kind} with ID {run.id}")
        return run.id
    except SQLAlchemyError as e:
        db.session.rollback()
        logger.error(f"Error storing run kind={kind}: {str(e)}")
        return None


def store_records(run_id: int, rows: Sequence[ResultRow]) -> int:
    """Store the result rows of a run.

    Returns:
        int: Number of rows stored; 0 if storage fails.
    """
    try:
        db.session.add_all([
            ResultRecord(
                run_id=run_id,
                path_id=row.path_id,
                n=row.n,
                estimator=row.estimator,
                value=row.value if math.isfinite(row.value) else None,
                status=row.status,
            )
            for row in rows
        ])
        db.session.commit()
        logger.debug(f"Stored {len(rows)} records for run {run_id}")
        return len(rows)
    except SQLAlchemyError as e:
        db.session.rollback()
        logger.error(f"Error storing records for run {run_id}: {str(e)}")
        return 0


def get_all_runs() -> List[Dict[str, Union[int, str]]]:
    """Retrieve all stored runs, newest last.

    Returns:
        List[Dict[str, Union[int, str]]]: Run summaries without their records.
    """
    try:
        runs = ExperimentRun.query.order_by(ExperimentRun.id).all()
        result = [
            {
                "id": run.id,
                "kind": run.kind,
                "master_seed": run.master_seed,
                "status": run.status,
                "created_at": run.created_at.isoformat(),
                "config": run.config_text,
            }
            for run in runs
        ]
        logger.debug(f"Retrieved {len(result)} runs from database")
        return result
    except SQLAlchemyError as e:
        logger.error(f"Error retrieving runs: {str(e)}")
        return []


def get_run(run_id: int) -> Optional[ExperimentRun]:
    """Retrieve one stored run.

    Args:
        run_id: Primary key of the run.

    Returns:
        Optional[ExperimentRun]: The run, or None if it is missing or the query fails.
    """
    try:
        return db.session.get(ExperimentRun, run_id)
    except SQLAlchemyError as e:
        logger.error(f"Error retrieving run {run_id}: {str(e)}")
        return None


def get_run_records(run_id: int) -> List[ResultRow]:
    """Retrieve the rows of a run in (path_id, n, estimator) order.

    Returns:
        List[ResultRow]: Stored rows; missing values come back as NaN.
    """
    try:
        run = db.session.get(ExperimentRun, run_id)
        if run is None:
            return []
        records = (ResultRecord.query.filter_by(run_id=run_id)
                   .order_by(ResultRecord.path_id, ResultRecord.n, ResultRecord.id).all())
        rows = [
            ResultRow(run.kind, record.path_id, record.n, record.estimator,
                      math.nan if record.value is None else record.value, record.status)
            for record in records
        ]
        logger.debug(f"Retrieved {len(rows)} records for run {run_id}")
        return rows
    except SQLAlchemyError as e:
        logger.error(f"Error retrieving records for run {run_id}: {str(e)}")
        return []
