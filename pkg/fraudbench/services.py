import io
import logging
from typing import Optional

from sqlalchemy.orm import Session

from fraudbench import bench, cruds, data, lowprec
from fraudbench.bench import BenchReport, CompareReport
from fraudbench.data import ValidationReport
from fraudbench.errors import RunNotFound
from fraudbench.lowprec import FormatKind
from fraudbench.models import BenchRun

logger = logging.getLogger(__name__)


def _summary(run: BenchRun) -> dict:
    return {
        "id": run.id,
        "created_at": run.created_at,
        "label": run.label,
        "precision": run.precision,
        "resample": run.resample,
        "split_seed": run.split_seed,
        "accuracy": run.accuracy,
        "roc_auc": run.roc_auc,
        "fit_cpu_seconds": run.fit_cpu_seconds,
        "matrix_bytes": run.matrix_bytes,
    }


def save_report(db: Session, report: BenchReport, label: Optional[str] = None) -> dict:
    run = BenchRun(
        label=label or report.label,
        precision=report.config.precision.value,
        resample=report.config.resample.kind.value,
        data_fingerprint=report.data_fingerprint,
        split_seed=report.config.split_seed,
        accuracy=report.metrics.accuracy,
        roc_auc=report.roc_auc,
        fit_cpu_seconds=report.fit.cpu_seconds,
        matrix_bytes=report.matrix_bytes,
        report_json=report.model_dump_json(by_alias=True),
    )
    run = cruds.create_run(db, run)
    logger.info("stored run %d (%s)", run.id, run.label)
    return _summary(run)


def get_runs(db: Session):
    return [_summary(run) for run in cruds.get_all_runs(db)]


def _get_run(db: Session, run_id: int) -> BenchRun:
    run = cruds.get_run_by_id(db, run_id)
    if not run:
        raise RunNotFound(run_id)
    return run


def get_report(db: Session, run_id: int) -> BenchReport:
    return BenchReport.model_validate_json(_get_run(db, run_id).report_json)


def compare_runs(db: Session, baseline_id: int, candidate_id: int) -> CompareReport:
    return bench.compare(get_report(db, baseline_id), get_report(db, candidate_id))


def remove_run(db: Session, run_id: int) -> None:
    cruds.delete_run(db, _get_run(db, run_id))


def audit_csv(content: bytes, precision: FormatKind = FormatKind.single32) -> ValidationReport:
    dataset = data.load_csv(io.BytesIO(content), lowprec.get_format(precision))
    return data.validate(dataset)
