from typing import Any, Dict, Optional
from flask import Flask
import config
from db.database import initialize_database
import routes
import logging

logger = logging.getLogger(__name__)


def create_app(test_config: Optional[Dict[str, Any]] = None) -> Flask:
    """Create and configure the Flask application.

    Initializes the Flask app, sets up configuration, database, and routes.

    Args:
        test_config: Overrides applied after the environment configuration.

    Returns:
        Flask: Configured Flask application instance.
    """
    app = Flask(__name__)
    app.config["RESULTS_FOLDER"] = config.RESULTS_FOLDER
    app.config["SQLALCHEMY_DATABASE_URI"] = config.SQLALCHEMY_DATABASE_URI
    app.config["SQLALCHEMY_TRACK_MODIFICATIONS"] = config.SQLALCHEMY_TRACK_MODIFICATIONS
    if test_config:
        app.config.update(test_config)

    initialize_database(app)
    app.register_blueprint(routes.api_bp)
    logger.info("Database and application initialized successfully")

    return app


def run_application() -> None:
    """Run the Flask application with configured settings."""
    config.configure_logging()
    app = create_app()
    logger.info("Starting Flask application")
    app.run(debug=False, host="0.0.0.0", port=5000)


if __name__ == "__main__":
    run_application()
