from fastapi import APIRouter, Depends, File, UploadFile
from sqlalchemy.orm import Session

from fraudbench import services
from fraudbench.bench import BenchReport, CompareReport
from fraudbench.data import ValidationReport
from fraudbench.database import get_db
from fraudbench.lowprec import FormatKind

router = APIRouter()


@router.get("/runs", tags=["runs"])
def read_runs(db: Session = Depends(get_db)):
    return services.get_runs(db)


@router.get("/runs/{run_id}", tags=["runs"], response_model=BenchReport)
def read_run(run_id: int, db: Session = Depends(get_db)):
    return services.get_report(db, run_id)


@router.delete("/runs/{run_id}", tags=["runs"])
def delete_run(run_id: int, db: Session = Depends(get_db)):
    services.remove_run(db, run_id)
    return {"message": "Run deleted successfully"}


@router.get("/runs/{baseline_id}/compare/{candidate_id}", tags=["runs"], response_model=CompareReport)
def compare_runs(baseline_id: int, candidate_id: int, db: Session = Depends(get_db)):
    return services.compare_runs(db, baseline_id, candidate_id)


@router.post("/datasets/validate", tags=["datasets"], response_model=ValidationReport)
async def validate_dataset(file: UploadFile = File(...), precision: FormatKind = FormatKind.single32):
    content = await file.read()
    return services.audit_csv(content, precision)
