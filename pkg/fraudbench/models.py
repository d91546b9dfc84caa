from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Float, Integer, String, Text

from fraudbench.database import Base


def _now():
    return datetime.now(timezone.utc)


class BenchRun(Base):
    __tablename__ = "bench_run"
    id = Column(Integer, primary_key=True)
    created_at = Column(DateTime(timezone=True), nullable=False, default=_now)
    label = Column(String(100), nullable=False)
    precision = Column(String(16), nullable=False)
    resample = Column(String(16), nullable=False)
    data_fingerprint = Column(String(64), nullable=False, index=True)
    split_seed = Column(Integer, nullable=False)
    accuracy = Column(Float)
    roc_auc = Column(Float)
    fit_cpu_seconds = Column(Float, nullable=False)
    matrix_bytes = Column(Integer, nullable=False)
    report_json = Column(Text, nullable=False)

    def __repr__(self):
        return f"BenchRun(id={self.id!r}, label={self.label!r}, precision={self.precision!r})"
