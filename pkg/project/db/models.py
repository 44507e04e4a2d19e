from datetime import datetime, timezone

from flask_sqlalchemy import SQLAlchemy
import config

db = SQLAlchemy()


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class ExperimentRun(db.Model):
    """Database model representing one executed experiment.

    Attributes:
        id: Unique identifier for the run.
        kind: Experiment kind from the config.
        master_seed: Seed the paths were keyed with.
        config_text: Canonical text of the resolved config.
        status: "ok", or "truncated" when every path ran out of budget.
        created_at: When the run was stored.
    """
    __tablename__ = config.RUNS_TABLE
    id = db.Column(db.Integer, primary_key=True)
    kind = db.Column(db.String(32), nullable=False)
    master_seed = db.Column(db.String(20), nullable=False)
    config_text = db.Column(db.Text, nullable=False)
    status = db.Column(db.String(16), nullable=False, default="ok")
    created_at = db.Column(db.DateTime(timezone=True), nullable=False, default=_utcnow)
    records = db.relationship("ResultRecord", backref="run", lazy=True, cascade="all, delete-orphan")


class ResultRecord(db.Model):
    """Database model representing one row of a series CSV.

    Attributes:
        run_id: Owning run.
        path_id: Path index, or -1 for sample-level statistics.
        n: Walk time.
        estimator: Estimator name.
        value: Estimate; NULL for truncated rows.
        status: "ok", "truncated" or "downgraded".
    """
    __tablename__ = config.RECORDS_TABLE
    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey(f"{config.RUNS_TABLE}.id"), nullable=False, index=True)
    path_id = db.Column(db.Integer, nullable=False)
    n = db.Column(db.Integer, nullable=False)
    estimator = db.Column(db.String(64), nullable=False)
    value = db.Column(db.Float, nullable=True)
    status = db.Column(db.String(16), nullable=False)
