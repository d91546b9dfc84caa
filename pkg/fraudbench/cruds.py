from sqlalchemy.orm import Session

from fraudbench.models import BenchRun


def create_run(db: Session, run: BenchRun) -> BenchRun:
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def get_all_runs(db: Session):
    return db.query(BenchRun).order_by(BenchRun.id).all()


def get_run_by_id(db: Session, run_id: int):
    return db.query(BenchRun).filter(BenchRun.id == run_id).first()


def delete_run(db: Session, run: BenchRun) -> None:
    db.delete(run)
    db.commit()
