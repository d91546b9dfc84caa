import hashlib
import logging
import math
from pathlib import Path
from typing import IO, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from fraudbench import lowprec
from fraudbench.errors import (
    DataError,
    DegenerateSplit,
    InvalidConfig,
    InvalidLabel,
    MissingColumn,
    NonNumericCell,
    NullCell,
)
from fraudbench.lowprec import SINGLE32, FormatKind, PrecisionFormat, QuantizedMatrix, RoundingMode

logger = logging.getLogger(__name__)

# 列の並び: Time, V1..V28, Amount, Class
FEATURE_COLUMNS = ["Time", *[f"V{i}" for i in range(1, 29)], "Amount"]
LABEL_COLUMN = "Class"
COLUMNS = [*FEATURE_COLUMNS, LABEL_COLUMN]
N_FEATURES = len(FEATURE_COLUMNS)
TIME_INDEX = FEATURE_COLUMNS.index("Time")
AMOUNT_INDEX = FEATURE_COLUMNS.index("Amount")

_NULL_TOKENS = {"", "na", "n/a", "nan", "null", "none"}


class Dataset(BaseModel):
    """保存形式の特徴量行列とラベルの組。作成後は変更しない。

    storage は Single32 なら float32、16ビット形式ならビット列（uint16）。
    計算に使う値は features / column / rows で float32 に広げて取り出す。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    storage: np.ndarray
    labels: np.ndarray
    precision: PrecisionFormat = SINGLE32
    rounding: RoundingMode = RoundingMode.nearest_even

    @model_validator(mode="after")
    def check_shape(self) -> "Dataset":
        if self.storage.ndim != 2 or self.storage.shape[1] != N_FEATURES:
            raise ValueError(f"features must be n x {N_FEATURES}, got {self.storage.shape}")
        expected = np.uint16 if self.precision.is_16bit else np.float32
        if self.storage.dtype != expected:
            raise ValueError(f"{self.precision.kind.value} storage must be {np.dtype(expected).name}")
        if self.labels.shape != (self.storage.shape[0],):
            raise ValueError("labels must be a vector with one entry per row")
        return self

    @classmethod
    def from_arrays(
        cls,
        features,
        labels,
        precision: PrecisionFormat = SINGLE32,
        rounding: RoundingMode = RoundingMode.nearest_even,
    ) -> "Dataset":
        raw = np.asarray(features, dtype=np.float32).reshape(-1, N_FEATURES)
        qm = lowprec.quantize_matrix(raw, precision, rounding)
        return cls._build(qm.storage, labels, precision, rounding)

    @classmethod
    def _build(cls, storage, labels, precision, rounding) -> "Dataset":
        dtype = np.uint16 if precision.is_16bit else np.float32
        x = np.ascontiguousarray(storage, dtype=dtype)
        y = np.asarray(labels)
        bad = np.flatnonzero((y != 0) & (y != 1))
        if bad.size:
            raise InvalidLabel(int(bad[0]), y[bad[0]].item())
        y = y.astype(np.int8)
        x.setflags(write=False)
        y.setflags(write=False)
        return cls(storage=x, labels=y, precision=precision, rounding=RoundingMode(rounding))

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def matrix_bytes(self) -> int:
        return int(self.storage.nbytes)

    @property
    def features(self) -> np.ndarray:
        """行列全体を float32 に広げたもの（読み取り専用）。"""
        values = lowprec.widen(self.storage, self.precision)
        values.setflags(write=False)
        return values

    def column(self, j: int) -> np.ndarray:
        return lowprec.widen(self.storage[:, j], self.precision)

    def rows(self, indices) -> np.ndarray:
        return lowprec.widen(self.storage[np.asarray(indices, dtype=np.int64)], self.precision)

    def class_counts(self) -> Tuple[int, int]:
        n_fraud = int(self.labels.sum(dtype=np.int64))
        return self.n - n_fraud, n_fraud

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset._build(self.storage[idx], self.labels[idx], self.precision, self.rounding)

    def with_precision(
        self, fmt: PrecisionFormat, rounding: RoundingMode = RoundingMode.nearest_even
    ) -> "Dataset":
        if fmt == self.precision and RoundingMode(rounding) is self.rounding:
            return self
        values = self.features
        if np.isfinite(values).all():
            qm = lowprec.quantize_matrix(values, fmt, rounding)
        else:
            qm = lowprec.pack(values, fmt, rounding)
        return Dataset._build(qm.storage, self.labels, fmt, rounding)

    def extend(self, values, labels) -> "Dataset":
        """新しい行（合成サンプルなど）をこのデータセットの精度で格納して末尾に足す。"""
        values = np.asarray(values, dtype=np.float32).reshape(-1, N_FEATURES)
        packed = lowprec.pack(values, self.precision, self.rounding)
        storage = np.concatenate([self.storage, packed.storage])
        all_labels = np.concatenate([self.labels, np.asarray(labels, dtype=np.int8)])
        return Dataset._build(storage, all_labels, self.precision, self.rounding)

    def quantized(self) -> QuantizedMatrix:
        """格納済みの行列をそのまま QuantizedMatrix として見せる（コピーしない）。"""
        if self.precision.is_16bit:
            overflow = int(((self.storage & 0x7FFF) == self.precision.infinity_bits).sum())
        else:
            overflow = int(np.isinf(self.storage).sum())
        rows, cols = self.storage.shape
        return QuantizedMatrix(
            rows=rows, cols=cols, format=self.precision, storage=self.storage, overflow_cells=overflow
        )

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.precision.kind.value.encode())
        digest.update(np.ascontiguousarray(self.storage).tobytes())
        digest.update(np.ascontiguousarray(self.labels).tobytes())
        return digest.hexdigest()


class ColumnAudit(BaseModel):
    name: str
    non_null: int
    infinite: int
    dtype: str
    min: Optional[float] = None
    max: Optional[float] = None


class ValidationReport(BaseModel):
    rows: int
    precision: FormatKind
    columns: List[ColumnAudit]
    memory_bytes: int

    @property
    def clean(self) -> bool:
        return all(c.non_null == self.rows and c.infinite == 0 for c in self.columns)


class ClassStats(BaseModel):
    n_total: int
    n_fraud: int
    n_nonfraud: int
    fraud_rate: Optional[float] = None
    amount_mean: Optional[float] = None
    amount_std: Optional[float] = None
    amount_median: Optional[float] = None
    amount_min: Optional[float] = None
    amount_max: Optional[float] = None
    time_mean: Optional[float] = None
    time_max: Optional[float] = None
    fraud_by_hour: List[int] = [0] * 24


# --------------------------------------------------
# CSV の読み込み
# --------------------------------------------------

def _null_mask(text: pd.Series) -> np.ndarray:
    return text.str.lower().isin(_NULL_TOKENS).to_numpy()


def _parse_feature(series: pd.Series, name: str) -> np.ndarray:
    text = series.astype(str).str.strip()
    null = _null_mask(text)
    if null.any():
        raise NullCell(int(np.flatnonzero(null)[0]), name)
    values = pd.to_numeric(text, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise NonNumericCell(row, name, text.iloc[row])
    return values


def _parse_labels(series: pd.Series) -> np.ndarray:
    text = series.astype(str).str.strip()
    null = _null_mask(text)
    if null.any():
        raise NullCell(int(np.flatnonzero(null)[0]), LABEL_COLUMN)
    values = pd.to_numeric(text, errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero((values != 0) & (values != 1))
    if bad.size:
        row = int(bad[0])
        raise InvalidLabel(row, text.iloc[row])
    return values.astype(np.int8)


def load_csv(
    source: Union[str, Path, IO],
    precision: PrecisionFormat = SINGLE32,
    rounding: RoundingMode = RoundingMode.nearest_even,
) -> Dataset:
    """CSV を読み込む。source はパスか、アップロードされたファイルのようなバッファ。"""
    if isinstance(source, (str, Path)):
        source = Path(source)
        name = str(source)
    else:
        name = getattr(source, "name", "<upload>")
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, na_filter=False)
    except FileNotFoundError:
        raise DataError(f"{name}: file not found")
    except pd.errors.EmptyDataError:
        raise DataError(f"{name}: empty file, a header row is required")

    frame.columns = [str(c).strip() for c in frame.columns]
    for column in COLUMNS:
        if column not in frame.columns:
            raise MissingColumn(column)

    features = np.empty((len(frame), N_FEATURES), dtype=np.float64)
    for j, column in enumerate(FEATURE_COLUMNS):
        features[:, j] = _parse_feature(frame[column], column)
    labels = _parse_labels(frame[LABEL_COLUMN])

    logger.info("loaded %d rows from %s at %s", len(frame), name, precision.kind.value)
    return Dataset.from_arrays(features, labels, precision, rounding)


def write_csv(d: Dataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame = pd.DataFrame(d.features, columns=FEATURE_COLUMNS)
    frame[LABEL_COLUMN] = d.labels.astype(np.int64)
    # 9桁あれば float32 は往復で一致する
    frame.to_csv(path, index=False, float_format="%.9g")
    return path


# --------------------------------------------------
# 検証と統計
# --------------------------------------------------

def _audit(name: str, values: np.ndarray, dtype: str) -> ColumnAudit:
    values = values.astype(np.float64)
    finite = values[np.isfinite(values)]
    return ColumnAudit(
        name=name,
        non_null=int((~np.isnan(values)).sum()),
        infinite=int(np.isinf(values).sum()),
        dtype=dtype,
        min=float(finite.min()) if finite.size else None,
        max=float(finite.max()) if finite.size else None,
    )


def validate(d: Dataset) -> ValidationReport:
    feature_dtype = d.precision.numpy_dtype_name
    columns = [_audit(name, d.column(j), feature_dtype) for j, name in enumerate(FEATURE_COLUMNS)]
    columns.append(_audit(LABEL_COLUMN, d.labels, str(d.labels.dtype)))
    return ValidationReport(
        rows=d.n,
        precision=d.precision.kind,
        columns=columns,
        memory_bytes=d.matrix_bytes + d.labels.nbytes,
    )


def format_audit(report: ValidationReport) -> str:
    lines = [
        f"RangeIndex: {report.rows} entries",
        f"Data columns (total {len(report.columns)} columns):",
        " #   Column  Non-Null Count  Dtype",
        "---  ------  --------------  -----",
    ]
    for i, c in enumerate(report.columns):
        flag = f"  ({c.infinite} inf)" if c.infinite else ""
        lines.append(f" {i:<3} {c.name:<7} {c.non_null:>6} non-null  {c.dtype}{flag}")
    dtypes: dict = {}
    for c in report.columns:
        dtypes[c.dtype] = dtypes.get(c.dtype, 0) + 1
    lines.append("dtypes: " + ", ".join(f"{k}({v})" for k, v in dtypes.items()))
    lines.append(f"memory usage: {report.memory_bytes / 1024 ** 2:.1f} MB")
    return "\n".join(lines)


def class_stats(d: Dataset) -> ClassStats:
    n_nonfraud, n_fraud = d.class_counts()
    stats = ClassStats(n_total=d.n, n_fraud=n_fraud, n_nonfraud=n_nonfraud)
    if d.n == 0:
        return stats

    amount = d.column(AMOUNT_INDEX).astype(np.float64)
    time = d.column(TIME_INDEX).astype(np.float64)
    fraud_time = time[(d.labels == 1) & np.isfinite(time)]
    hours = (np.floor(fraud_time / 3600.0) % 24).astype(np.int64)
    return stats.model_copy(
        update={
            "fraud_rate": n_fraud / d.n,
            "amount_mean": float(amount.mean()),
            "amount_std": float(amount.std(ddof=1)) if d.n > 1 else 0.0,
            "amount_median": float(np.median(amount)),
            "amount_min": float(amount.min()),
            "amount_max": float(amount.max()),
            "time_mean": float(time.mean()),
            "time_max": float(time.max()),
            "fraud_by_hour": np.bincount(hours, minlength=24).tolist(),
        }
    )


# --------------------------------------------------
# 分割と合成データ
# --------------------------------------------------

def _check_fraction(train_fraction: float) -> None:
    if not 0.0 < train_fraction < 1.0:
        raise InvalidConfig("train_fraction", f"must lie in (0, 1), got {train_fraction}")


def split(
    d: Dataset,
    train_fraction: float,
    seed: int,
    stratify: bool = False,
) -> Tuple[Dataset, Dataset]:
    """シード付きシャッフル後に先頭を学習用、残りをテスト用にする。学習行数は floor(n * fraction)。"""
    _check_fraction(train_fraction)
    rng = np.random.default_rng(seed)
    if stratify:
        train_parts, test_parts = [], []
        for label in (0, 1):
            idx = np.flatnonzero(d.labels == label)
            idx = idx[rng.permutation(idx.size)]
            cut = math.floor(idx.size * train_fraction)
            train_parts.append(idx[:cut])
            test_parts.append(idx[cut:])
        train_idx = np.concatenate(train_parts)
        test_idx = np.concatenate(test_parts)
        train_idx = train_idx[rng.permutation(train_idx.size)]
        test_idx = test_idx[rng.permutation(test_idx.size)]
    else:
        perm = rng.permutation(d.n)
        cut = math.floor(d.n * train_fraction)
        train_idx, test_idx = perm[:cut], perm[cut:]

    if train_idx.size == 0 or test_idx.size == 0:
        raise DegenerateSplit(d.n, train_fraction)
    logger.debug("split %d rows into %d/%d", d.n, train_idx.size, test_idx.size)
    return d.take(train_idx), d.take(test_idx)


def synth_generate(
    n: int,
    fraud_rate: float,
    separation: float,
    seed: int,
    precision: PrecisionFormat = SINGLE32,
) -> Dataset:
    """30次元の2つのガウス分布（平均の距離 = separation、標準偏差 1）。"""
    if n < 2:
        raise InvalidConfig("synth_n", f"need at least 2 rows, got {n}")
    if not 0.0 < fraud_rate < 1.0:
        raise InvalidConfig("synth_fraud_rate", f"must lie in (0, 1), got {fraud_rate}")

    rng = np.random.default_rng(seed)
    n_fraud = min(max(int(round(n * fraud_rate)), 1), n - 1)
    direction = np.full(N_FEATURES, 1.0 / math.sqrt(N_FEATURES))
    features = rng.standard_normal((n, N_FEATURES))
    labels = np.zeros(n, dtype=np.int8)
    labels[:n_fraud] = 1
    features[:n_fraud] += separation * direction

    perm = rng.permutation(n)
    return Dataset.from_arrays(features[perm], labels[perm], precision)
