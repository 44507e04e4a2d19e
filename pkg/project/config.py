from typing import Dict, Union
import os
from dotenv import load_dotenv
import logging

logger = logging.getLogger(__name__)

load_dotenv()

LETTER_BUDGET: int = int(os.getenv("LETTER_BUDGET", "100000000"))
BIT_BUDGET: int = int(os.getenv("BIT_BUDGET", "1000000"))
WALK_K_MAX: int = int(os.getenv("WALK_K_MAX", "4"))
STANDALONE_K_MAX: int = int(os.getenv("STANDALONE_K_MAX", "12"))
CONVERGENCE_TOL: float = float(os.getenv("CONVERGENCE_TOL", "1e-3"))
AGREEMENT_TOL: float = float(os.getenv("AGREEMENT_TOL", "0.01"))
LOG_TOL: float = float(os.getenv("LOG_TOL", "1e-9"))
DELTA_EXHAUSTIVE_LIMIT: int = int(os.getenv("DELTA_EXHAUSTIVE_LIMIT", "60"))
DELTA_SUBSAMPLE: int = int(os.getenv("DELTA_SUBSAMPLE", "200000"))
DEBUG_INVARIANTS: bool = os.getenv("DEBUG_INVARIANTS", "false").lower() == "true"
DEFAULT_THREADS: int = int(os.getenv("DEFAULT_THREADS", "1"))
RESULTS_FOLDER: str = os.getenv("RESULTS_FOLDER", "results")
SQLALCHEMY_DATABASE_URI: str = os.getenv("SQLALCHEMY_DATABASE_URI", "sqlite:///lab.db")
SQLALCHEMY_TRACK_MODIFICATIONS: bool = os.getenv("SQLALCHEMY_TRACK_MODIFICATIONS", "false").lower() == "true"
RUNS_TABLE: str = os.getenv("RUNS_TABLE", "experiment_runs")
RECORDS_TABLE: str = os.getenv("RECORDS_TABLE", "result_records")
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()


def ensure_results_folder() -> str:
    """Ensure the results folder exists.

    Returns:
        str: Path of the results folder.

    Raises:
        ValueError: If RESULTS_FOLDER is empty.
    """
    if not RESULTS_FOLDER:
        logger.error("RESULTS_FOLDER environment variable is empty")
        raise ValueError("RESULTS_FOLDER must not be empty")
    if not os.path.exists(RESULTS_FOLDER):
        os.makedirs(RESULTS_FOLDER)
        logger.info(f"Created results folder: {RESULTS_FOLDER}")
    return RESULTS_FOLDER


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Configure root logging for the CLI and the web application."""
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


positive_vars: Dict[str, Union[int, float]] = {
    "LETTER_BUDGET": LETTER_BUDGET,
    "BIT_BUDGET": BIT_BUDGET,
    "WALK_K_MAX": WALK_K_MAX,
    "STANDALONE_K_MAX": STANDALONE_K_MAX,
    "CONVERGENCE_TOL": CONVERGENCE_TOL,
    "AGREEMENT_TOL": AGREEMENT_TOL,
    "LOG_TOL": LOG_TOL,
    "DELTA_EXHAUSTIVE_LIMIT": DELTA_EXHAUSTIVE_LIMIT,
    "DELTA_SUBSAMPLE": DELTA_SUBSAMPLE,
    "DEFAULT_THREADS": DEFAULT_THREADS,
}

for var_name, var_value in positive_vars.items():
    if var_value <= 0:
        logger.error(f"Environment variable {var_name} must be positive, got {var_value}")
        raise ValueError(f"{var_name} must be positive in the .env file")

for var_name, var_value in {"RUNS_TABLE": RUNS_TABLE, "RECORDS_TABLE": RECORDS_TABLE}.items():
    if not var_value.strip():
        logger.error(f"Required environment variable {var_name} is empty in .env")
        raise ValueError(f"{var_name} must be defined in the .env file")
