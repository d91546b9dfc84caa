"""fraudbench の例外と警告。

すべての例外は FraudBenchError を継承し、message と error_code を持つ。
CLI は終了コード、API は JSON レスポンスにこの2つをそのまま使う。
"""

from typing import Any, List, Optional, Sequence, Tuple


class FraudBenchError(Exception):
    error_code = "FRAUDBENCH_ERROR"

    def __init__(self, message: str, error_code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if error_code is not None:
            self.error_code = error_code

    def __str__(self) -> str:
        return self.message


# --------------------------------------------------
# データ取り込み・検証
# --------------------------------------------------

class DataError(FraudBenchError):
    error_code = "DATA_ERROR"


class MissingColumn(DataError):
    error_code = "MISSING_COLUMN"

    def __init__(self, name: str):
        super().__init__(f"missing column {name!r}")
        self.name = name


class NullCell(DataError):
    error_code = "NULL_CELL"

    def __init__(self, row: int, col: str):
        super().__init__(f"null cell at row {row}, column {col!r}")
        self.row = row
        self.col = col


class NonNumericCell(DataError):
    error_code = "NON_NUMERIC_CELL"

    def __init__(self, row: int, col: str, text: str):
        super().__init__(f"non-numeric cell at row {row}, column {col!r}: {text!r}")
        self.row = row
        self.col = col
        self.text = text


class InvalidLabel(DataError):
    error_code = "INVALID_LABEL"

    def __init__(self, row: int, value: Any):
        super().__init__(f"invalid label at row {row}: {value!r} (expected 0 or 1)")
        self.row = row
        self.value = value


class DegenerateSplit(DataError):
    error_code = "DEGENERATE_SPLIT"

    def __init__(self, n: int, train_fraction: float):
        super().__init__(
            f"split of {n} rows at train_fraction={train_fraction} leaves an empty side"
        )
        self.n = n
        self.train_fraction = train_fraction


class NonFiniteInput(DataError):
    error_code = "NON_FINITE_INPUT"

    def __init__(self, count: int):
        super().__init__(f"matrix contains {count} NaN/infinite cells")
        self.count = count


# --------------------------------------------------
# リサンプリング・評価
# --------------------------------------------------

class SingleClass(FraudBenchError):
    error_code = "SINGLE_CLASS"

    def __init__(self, present: Sequence[int]):
        present = sorted(int(c) for c in present)
        super().__init__(f"both classes required, found only {present}")
        self.present = present


class InsufficientMinority(FraudBenchError):
    error_code = "INSUFFICIENT_MINORITY"

    def __init__(self, count: int):
        super().__init__(f"SMOTE needs at least 2 minority rows, got {count}")
        self.count = count


class LengthMismatch(FraudBenchError):
    error_code = "LENGTH_MISMATCH"

    def __init__(self, left: int, right: int):
        super().__init__(f"length mismatch: {left} != {right}")
        self.left = left
        self.right = right


class InvalidLabels(FraudBenchError):
    error_code = "INVALID_LABELS"

    def __init__(self, values: Sequence[Any]):
        super().__init__(f"labels must be 0 or 1, found {list(values)[:5]}")
        self.values = list(values)


class InvalidThreshold(FraudBenchError):
    error_code = "INVALID_THRESHOLD"

    def __init__(self, threshold: float):
        super().__init__(f"threshold must lie in [0, 1], got {threshold}")
        self.threshold = threshold


class UnsupportedRounding(FraudBenchError):
    error_code = "UNSUPPORTED_ROUNDING"


# --------------------------------------------------
# ベンチマーク・設定・ストア
# --------------------------------------------------

class InvalidConfig(FraudBenchError):
    error_code = "INVALID_CONFIG"

    def __init__(self, key: str, reason: str):
        super().__init__(f"invalid config {key!r}: {reason}")
        self.key = key
        self.reason = reason


class IncomparableRuns(FraudBenchError):
    error_code = "INCOMPARABLE_RUNS"


class EmptyReportList(FraudBenchError):
    error_code = "EMPTY_REPORT_LIST"

    def __init__(self):
        super().__init__("at least one report is required")


class RunNotFound(FraudBenchError):
    error_code = "RUN_NOT_FOUND"

    def __init__(self, run_id: int):
        super().__init__(f"run {run_id} not found")
        self.run_id = run_id


class PipelineError(FraudBenchError):
    error_code = "PIPELINE_ERROR"

    def __init__(self, stage: str, cause: FraudBenchError):
        super().__init__(f"[{stage}] {cause.message}", cause.error_code)
        self.stage = stage
        self.cause = cause


# --------------------------------------------------
# 警告（処理は続行する）
# --------------------------------------------------

class FraudBenchWarning(UserWarning):
    pass


class OverflowToInfinity(FraudBenchWarning):
    def __init__(self, count: int, cells: List[Tuple[int, int]], format_kind: str):
        preview = ", ".join(f"({r}, {c})" for r, c in cells[:5])
        more = "" if count <= 5 else f", ... ({count} total)"
        super().__init__(
            f"{count} cells overflow to infinity at {format_kind}: {preview}{more}"
        )
        self.count = count
        self.cells = cells


class KTooLarge(FraudBenchWarning):
    def __init__(self, k: int, clamped: int):
        super().__init__(f"smote k={k} >= minority count, clamped to {clamped}")
        self.k = k
        self.clamped = clamped


class UndefinedAUC(FraudBenchWarning):
    pass
