"""ベンチマークの実行・比較・出力。

読み込み → 検証 → 分割 → 量子化/リサンプリング → 学習（計測） → 予測（計測） → 評価
の順に進める。計測するのは学習と予測だけで、I/O や量子化は含めない。
"""

import logging
import statistics
import time
import warnings
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from fraudbench import data, forest, lowprec, metrics, resample
from fraudbench.config import get_settings, read_key_values
from fraudbench.data import ClassStats, Dataset
from fraudbench.errors import (
    EmptyReportList,
    FraudBenchError,
    IncomparableRuns,
    InvalidConfig,
    PipelineError,
    SingleClass,
    UndefinedAUC,
)
from fraudbench.forest import ForestConfig
from fraudbench.lowprec import FormatKind, QuantizationErrorReport, RoundingMode
from fraudbench.metrics import ConfusionMatrix, MetricsReport
from fraudbench.resample import ResampleKind, ResampleMode

logger = logging.getLogger(__name__)


# --------------------------------------------------
# 設定
# --------------------------------------------------

class QuantizeOrder(str, Enum):
    before_resample = "before_resample"
    after_resample = "after_resample"


class OutputFormat(str, Enum):
    json = "json"
    csv = "csv"
    text = "text"


class DataSource(BaseModel):
    """csv_path があれば CSV、なければ合成データを使う。"""

    model_config = ConfigDict(frozen=True)

    csv_path: Optional[Path] = None
    synth_n: int = Field(default=50_000, ge=2)
    synth_fraud_rate: float = Field(default=0.0017, gt=0, lt=1)
    synth_separation: float = Field(default=3.0, ge=0)
    synth_seed: int = Field(default=0, ge=0)

    @property
    def is_synthetic(self) -> bool:
        return self.csv_path is None


class BenchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: DataSource = DataSource()
    precision: FormatKind = FormatKind.single32
    rounding: RoundingMode = RoundingMode.nearest_even
    resample: ResampleMode = ResampleMode()
    forest: ForestConfig = ForestConfig()
    train_fraction: float = Field(default=0.7, gt=0, lt=1)
    split_seed: int = Field(default=0, ge=0)
    stratify: bool = False
    repetitions: int = Field(default=3, ge=1)
    threshold: float = Field(default=0.5, ge=0, le=1)
    quantize_order: QuantizeOrder = QuantizeOrder.before_resample
    n_jobs: Optional[int] = None
    output: Optional[Path] = None


# 設定ファイルのキー → BenchConfig 内の位置
FLAT_KEYS: Dict[str, Tuple[str, ...]] = {
    "csv_path": ("data", "csv_path"),
    "synth_n": ("data", "synth_n"),
    "synth_fraud_rate": ("data", "synth_fraud_rate"),
    "synth_separation": ("data", "synth_separation"),
    "synth_seed": ("data", "synth_seed"),
    "precision": ("precision",),
    "rounding": ("rounding",),
    "resample": ("resample", "kind"),
    "smote_k": ("resample", "k"),
    "quantize_order": ("quantize_order",),
    "train_fraction": ("train_fraction",),
    "split_seed": ("split_seed",),
    "stratify": ("stratify",),
    "repetitions": ("repetitions",),
    "threshold": ("threshold",),
    "n_trees": ("forest", "n_trees"),
    "max_depth": ("forest", "max_depth"),
    "min_samples_leaf": ("forest", "min_samples_leaf"),
    "min_samples_split": ("forest", "min_samples_split"),
    "features_per_split": ("forest", "features_per_split"),
    "criterion": ("forest", "criterion"),
    "bootstrap": ("forest", "bootstrap"),
    "forest_seed": ("forest", "seed"),
    "n_jobs": ("n_jobs",),
    "output": ("output",),
}

_NULLABLE = {"csv_path", "max_depth", "n_jobs", "output"}
_NULL_WORDS = {"", "none", "unlimited"}


def _flat_key(loc: Sequence[Any]) -> str:
    path = tuple(str(p) for p in loc)
    for key, target in FLAT_KEYS.items():
        if path[: len(target)] == target:
            return key
    return ".".join(path) or "config"


def config_from_mapping(values: Mapping[str, Any]) -> BenchConfig:
    """平坦な key=value を BenchConfig にする。

    csv_path も synth_* も指定がなければ FRAUDBENCH_CSV を使う。
    """
    nested: Dict[str, Any] = {}
    for key, raw in values.items():
        if key not in FLAT_KEYS:
            raise InvalidConfig(key, "unknown key")
        value = raw
        if key in _NULLABLE and (raw is None or str(raw).strip().lower() in _NULL_WORDS):
            value = None
        *parents, leaf = FLAT_KEYS[key]
        target = nested
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = value

    if not any(key == "csv_path" or key.startswith("synth_") for key in values):
        default_csv = get_settings().csv_path
        if default_csv is not None:
            nested.setdefault("data", {})["csv_path"] = default_csv

    try:
        return BenchConfig.model_validate(nested)
    except ValidationError as exc:
        error = exc.errors()[0]
        raise InvalidConfig(_flat_key(error["loc"]), error["msg"]) from None


def load_bench_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> BenchConfig:
    values: Dict[str, Any] = dict(read_key_values(Path(path))) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return config_from_mapping(values)


def flatten_config(config: BenchConfig) -> Dict[str, Any]:
    dumped = config.model_dump(mode="json")
    flat: Dict[str, Any] = {}
    for key, path in FLAT_KEYS.items():
        value: Any = dumped
        for part in path:
            value = value[part]
        flat[key] = value
    return flat


# --------------------------------------------------
# 計測
# --------------------------------------------------

class Clock(Protocol):
    def cpu(self) -> float: ...

    def wall(self) -> float: ...


class ProcessClock:
    """プロセス CPU 時間（全スレッド合計）と経過時間。"""

    def cpu(self) -> float:
        return time.process_time()

    def wall(self) -> float:
        return time.perf_counter()


class Timing(BaseModel):
    cpu_seconds: float
    wall_seconds: float
    cpu_samples: List[float]
    wall_samples: List[float]

    @classmethod
    def from_samples(cls, cpu: List[float], wall: List[float]) -> "Timing":
        return cls(
            cpu_seconds=statistics.median(cpu),
            wall_seconds=statistics.median(wall),
            cpu_samples=cpu,
            wall_samples=wall,
        )


# --------------------------------------------------
# レポート
# --------------------------------------------------

class BenchReport(BaseModel):
    config: BenchConfig
    dataset: ClassStats
    data_fingerprint: str
    train_class_counts: Tuple[int, int]
    test_rows: int
    fit: Timing
    predict: Timing
    matrix_bytes: int
    overflow_cells: int
    quantization: QuantizationErrorReport
    confusion: ConfusionMatrix
    metrics: MetricsReport
    roc_auc: Optional[float] = None

    @property
    def label(self) -> str:
        return f"{self.config.precision.value}/{self.config.resample.kind.value}"

    @property
    def fit_cpu_seconds(self) -> float:
        return self.fit.cpu_seconds


class CompareReport(BaseModel):
    baseline: BenchReport
    candidate: BenchReport
    accuracy_delta: Optional[float]
    fraud_precision_delta: Optional[float]
    fraud_recall_delta: Optional[float]
    roc_auc_delta: Optional[float]
    time_reduction_pct: Optional[float]
    wall_time_reduction_pct: Optional[float]
    memory_ratio: float


class PublishedResult(BaseModel):
    confusion: ConfusionMatrix
    roc_auc: Optional[float] = None


# 公表値（テスト分割 85443 行）。テキストレポートに並べて表示する
PUBLISHED: Dict[Tuple[FormatKind, ResampleKind], PublishedResult] = {
    (FormatKind.single32, ResampleKind.none): PublishedResult(
        confusion=ConfusionMatrix(tp=116, fp=9, fn=32, tn=85286), roc_auc=0.9444259034226207
    ),
    (FormatKind.single32, ResampleKind.smote): PublishedResult(
        confusion=ConfusionMatrix(tp=117, fp=2, fn=31, tn=85293), roc_auc=0.9546151433102603
    ),
    (FormatKind.half16, ResampleKind.none): PublishedResult(
        confusion=ConfusionMatrix(tp=114, fp=8, fn=34, tn=85287)
    ),
    (FormatKind.half16, ResampleKind.smote): PublishedResult(
        confusion=ConfusionMatrix(tp=121, fp=20, fn=27, tn=85275)
    ),
}
CLAIMED_TIME_REDUCTION_PCT = (50.0, 60.0)
CLAIMED_MAX_ACCURACY_LOSS = 1.64e-3


# --------------------------------------------------
# パイプライン
# --------------------------------------------------

@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except FraudBenchError as exc:
        logger.error("pipeline stage %s failed: %s", name, exc.message)
        raise PipelineError(name, exc) from exc


def _load(source: DataSource) -> Dataset:
    if source.csv_path is not None:
        return data.load_csv(source.csv_path)
    return data.synth_generate(
        source.synth_n, source.synth_fraud_rate, source.synth_separation, source.synth_seed
    )


def run_pipeline(config: BenchConfig, clock: Optional[Clock] = None) -> BenchReport:
    clock = clock or ProcessClock()
    fmt = lowprec.get_format(config.precision)
    n_jobs = config.n_jobs if config.n_jobs is not None else get_settings().n_jobs

    with _stage("load"):
        raw = _load(config.data)

    with _stage("validate"):
        audit = data.validate(raw)
        stats = data.class_stats(raw)
        logger.info("dataset: %d rows, %d fraud", stats.n_total, stats.n_fraud)
        logger.debug("audit clean=%s, %d bytes at single32", audit.clean, audit.memory_bytes)

    with _stage("quantize"):
        stored = raw.with_precision(fmt, config.rounding)
        packed = stored.quantized()
        error = lowprec.quantization_error(raw.features, fmt, config.rounding)

    # 同じシードなら raw と stored は同じ行で分割される
    with _stage("split"):
        train, test = data.split(stored, config.train_fraction, config.split_seed, config.stratify)
        if config.quantize_order is QuantizeOrder.after_resample:
            train, _ = data.split(raw, config.train_fraction, config.split_seed, config.stratify)

    with _stage("resample"):
        train = resample.resample(train, config.resample, config.split_seed, n_jobs)
        if config.quantize_order is QuantizeOrder.after_resample:
            train = train.with_precision(fmt, config.rounding)

    fit_cpu: List[float] = []
    fit_wall: List[float] = []
    predict_cpu: List[float] = []
    predict_wall: List[float] = []
    scores = None
    for rep in range(config.repetitions):
        with _stage("train"):
            c0, w0 = clock.cpu(), clock.wall()
            model = forest.train_forest(train, config.forest, n_jobs)
            c1, w1 = clock.cpu(), clock.wall()
        with _stage("predict"):
            scores = forest.predict_proba_batch(model, test, n_jobs)
            c2, w2 = clock.cpu(), clock.wall()
        fit_cpu.append(max(0.0, c1 - c0))
        fit_wall.append(max(0.0, w1 - w0))
        predict_cpu.append(max(0.0, c2 - c1))
        predict_wall.append(max(0.0, w2 - w1))
        logger.info("repetition %d: fit %.3fs cpu, predict %.3fs cpu", rep + 1, fit_cpu[-1], predict_cpu[-1])

    with _stage("metrics"):
        predicted = forest.labels_from_scores(scores, config.threshold)
        cm = metrics.confusion(test.labels, predicted)
        report = metrics.derive_metrics(cm)
        try:
            auc: Optional[float] = metrics.roc_auc(test.labels, scores)
        except SingleClass as exc:
            warning = UndefinedAUC(f"roc_auc undefined: {exc.message}")
            logger.warning("%s", warning)
            warnings.warn(warning, stacklevel=2)
            auc = None

    return BenchReport(
        config=config,
        dataset=stats,
        data_fingerprint=raw.fingerprint(),
        train_class_counts=train.class_counts(),
        test_rows=test.n,
        fit=Timing.from_samples(fit_cpu, fit_wall),
        predict=Timing.from_samples(predict_cpu, predict_wall),
        matrix_bytes=stored.matrix_bytes,
        overflow_cells=packed.overflow_cells,
        quantization=error,
        confusion=cm,
        metrics=report,
        roc_auc=auc,
    )


# --------------------------------------------------
# 比較
# --------------------------------------------------

def _delta(baseline: Optional[float], candidate: Optional[float]) -> Optional[float]:
    if baseline is None or candidate is None:
        return None
    return candidate - baseline


def _reduction_pct(baseline: float, candidate: float) -> Optional[float]:
    if baseline <= 0:
        return None
    return 100.0 * (baseline - candidate) / baseline


def compare(baseline: BenchReport, candidate: BenchReport) -> CompareReport:
    if baseline.data_fingerprint != candidate.data_fingerprint:
        raise IncomparableRuns("runs were made on different data")
    if baseline.config.split_seed != candidate.config.split_seed:
        raise IncomparableRuns(
            f"split seeds differ: {baseline.config.split_seed} vs {candidate.config.split_seed}"
        )
    if baseline.config.train_fraction != candidate.config.train_fraction:
        raise IncomparableRuns("train fractions differ")

    b, c = baseline.metrics, candidate.metrics
    return CompareReport(
        baseline=baseline,
        candidate=candidate,
        accuracy_delta=_delta(b.accuracy, c.accuracy),
        fraud_precision_delta=_delta(b.precision, c.precision),
        fraud_recall_delta=_delta(b.recall, c.recall),
        roc_auc_delta=_delta(baseline.roc_auc, candidate.roc_auc),
        time_reduction_pct=_reduction_pct(baseline.fit.cpu_seconds, candidate.fit.cpu_seconds),
        wall_time_reduction_pct=_reduction_pct(baseline.fit.wall_seconds, candidate.fit.wall_seconds),
        memory_ratio=baseline.matrix_bytes / candidate.matrix_bytes,
    )


# --------------------------------------------------
# 出力
# --------------------------------------------------

CSV_HEADER = [
    "format",
    "resample",
    "quantize_order",
    "n_trees",
    "forest_seed",
    "split_seed",
    "train_rows",
    "test_rows",
    "matrix_bytes",
    "overflow_cells",
    "fit_cpu_seconds",
    "fit_wall_seconds",
    "predict_cpu_seconds",
    "predict_wall_seconds",
    "tp",
    "fp",
    "fn",
    "tn",
    "accuracy",
    "fraud_precision",
    "fraud_recall",
    "f1",
    "roc_auc",
    "data_fingerprint",
]


def _csv_row(r: BenchReport) -> Dict[str, Any]:
    return {
        "format": r.config.precision.value,
        "resample": r.config.resample.kind.value,
        "quantize_order": r.config.quantize_order.value,
        "n_trees": r.config.forest.n_trees,
        "forest_seed": r.config.forest.seed,
        "split_seed": r.config.split_seed,
        "train_rows": sum(r.train_class_counts),
        "test_rows": r.test_rows,
        "matrix_bytes": r.matrix_bytes,
        "overflow_cells": r.overflow_cells,
        "fit_cpu_seconds": r.fit.cpu_seconds,
        "fit_wall_seconds": r.fit.wall_seconds,
        "predict_cpu_seconds": r.predict.cpu_seconds,
        "predict_wall_seconds": r.predict.wall_seconds,
        "tp": r.confusion.tp,
        "fp": r.confusion.fp,
        "fn": r.confusion.fn,
        "tn": r.confusion.tn,
        "accuracy": r.metrics.accuracy,
        "fraud_precision": r.metrics.precision,
        "fraud_recall": r.metrics.recall,
        "f1": r.metrics.f1,
        "roc_auc": r.roc_auc,
        "data_fingerprint": r.data_fingerprint,
    }


def emit_reports_csv(reports: Sequence[BenchReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    frame = pd.DataFrame([_csv_row(r) for r in reports], columns=CSV_HEADER)
    frame.to_csv(path, index=False)
    return path


def _num(value: Optional[float], digits: int = 9) -> str:
    return metrics.UNDEFINED if value is None else f"{value:.{digits}f}"


def render_text(r: BenchReport) -> str:
    m = r.metrics
    c = r.confusion
    title = f"Random Forest Classifier ({r.config.precision.value}, resample={r.config.resample.kind.value})"
    lines = [
        title,
        f"{'Accuracy':<22}{_num(m.accuracy)}",
        f"{'Precision [0, 1]':<22}{_num(m.per_class_precision[0], 8)}  {_num(m.per_class_precision[1], 8)}",
        f"{'Recall [0, 1]':<22}{_num(m.per_class_recall[0], 8)}  {_num(m.per_class_recall[1], 8)}",
        f"{'ROC AUC':<22}{_num(r.roc_auc)}",
        "",
        f"{'':<22}{'Not Fraud':>10}{'Fraud':>10}   (predicted)",
        f"{'Actual Not Fraud':<22}{c.tn:>10}{c.fp:>10}",
        f"{'Actual Fraud':<22}{c.fn:>10}{c.tp:>10}",
        "",
        f"{'Fit CPU (median)':<22}{r.fit.cpu_seconds:.3f} s over {len(r.fit.cpu_samples)} runs",
        f"{'Fit wall (median)':<22}{r.fit.wall_seconds:.3f} s",
        f"{'Predict CPU (median)':<22}{r.predict.cpu_seconds:.3f} s",
        f"{'Matrix bytes':<22}{r.matrix_bytes}",
        f"{'Overflow cells':<22}{r.overflow_cells}",
        f"{'Train rows [0, 1]':<22}{r.train_class_counts[0]}  {r.train_class_counts[1]}",
    ]
    published = PUBLISHED.get((r.config.precision, r.config.resample.kind))
    if published is not None:
        pm = metrics.derive_metrics(published.confusion)
        p = published.confusion
        lines += [
            "",
            f"Published ({r.label}): accuracy {_num(pm.accuracy)}, "
            f"tn={p.tn} fp={p.fp} fn={p.fn} tp={p.tp}, roc_auc {_num(published.roc_auc)}",
        ]
    return "\n".join(lines) + "\n"


def render_compare_text(cr: CompareReport) -> str:
    low, high = CLAIMED_TIME_REDUCTION_PCT
    reduction = metrics.UNDEFINED if cr.time_reduction_pct is None else f"{cr.time_reduction_pct:.1f}%"
    lines = [
        f"baseline  {cr.baseline.label}",
        f"candidate {cr.candidate.label}",
        f"{'accuracy delta':<24}{_num(cr.accuracy_delta)}   (published max loss {CLAIMED_MAX_ACCURACY_LOSS:g})",
        f"{'fraud precision delta':<24}{_num(cr.fraud_precision_delta)}",
        f"{'fraud recall delta':<24}{_num(cr.fraud_recall_delta)}",
        f"{'roc auc delta':<24}{_num(cr.roc_auc_delta)}",
        f"{'fit cpu reduction':<24}{reduction}   (published claim {low:.0f}-{high:.0f}%)",
        f"{'memory ratio':<24}{cr.memory_ratio:.3f}",
    ]
    return "\n".join(lines) + "\n"


def emit_report(report: BenchReport, fmt: Union[str, OutputFormat], path: Union[str, Path]) -> Path:
    fmt = OutputFormat(fmt)
    path = Path(path)
    if fmt is OutputFormat.csv:
        return emit_reports_csv([report], path)
    if fmt is OutputFormat.json:
        path.write_text(report.model_dump_json(by_alias=True, indent=2) + "\n", encoding="utf-8")
    else:
        path.write_text(render_text(report), encoding="utf-8")
    logger.info("wrote %s report to %s", fmt.value, path)
    return path


def load_report(path: Union[str, Path]) -> BenchReport:
    return BenchReport.model_validate_json(Path(path).read_text(encoding="utf-8"))


def build_timing_figure(reports: Sequence[BenchReport]) -> Figure:
    """精度ごとにまとめ、リサンプリング方式ごとに1本の棒（学習 CPU 秒）を並べる。"""
    if not reports:
        raise EmptyReportList()
    precisions = list(dict.fromkeys(r.config.precision.value for r in reports))
    kinds = list(dict.fromkeys(r.config.resample.kind.value for r in reports))
    width = 0.8 / len(kinds)

    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    for j, kind in enumerate(kinds):
        members = [r for r in reports if r.config.resample.kind.value == kind]
        offset = (j - (len(kinds) - 1) / 2) * width
        xs = [precisions.index(r.config.precision.value) + offset for r in members]
        heights = [r.fit.cpu_seconds for r in members]
        bars = ax.bar(xs, heights, width, label=f"resample={kind}")
        ax.bar_label(bars, labels=[f"{h:.2f} s" for h in heights])
    ax.set_xticks(range(len(precisions)), precisions)
    ax.set_ylabel("fit CPU time (s)")
    ax.set_title("CPU execution time for training")
    ax.legend()
    return fig


def emit_timing_chart(reports: Sequence[BenchReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    build_timing_figure(reports).savefig(path, format="svg")
    logger.info("wrote timing chart for %d runs to %s", len(reports), path)
    return path


# --------------------------------------------------
# データの可視化
# --------------------------------------------------

DATA_CHARTS = ("columns", "time_density", "fraud_time_amount", "fraud_by_hour", "classes")


def _finite(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return values[np.isfinite(values)]


def build_column_figure(d: Dataset, bins: int = 50) -> Figure:
    """全列（30 特徴量 + Class）のヒストグラムを 6 x 6 に並べる。"""
    names = [*data.FEATURE_COLUMNS, data.LABEL_COLUMN]
    fig = Figure(figsize=(18.0, 14.0), layout="constrained")
    for j, name in enumerate(names):
        ax = fig.add_subplot(6, 6, j + 1)
        values = d.labels if name == data.LABEL_COLUMN else _finite(d.column(j))
        ax.hist(values, bins=bins)
        ax.set_title(name, fontsize=9)
        ax.tick_params(labelsize=6)
    return fig


def build_time_density_figure(d: Dataset, bins: int = 48) -> Figure:
    """クラスごとの Time の密度（ステップ状のヒストグラム）。"""
    time_values = d.column(data.TIME_INDEX)
    fig = Figure(figsize=(8.0, 4.0))
    ax = fig.add_subplot()
    for label, name, color in ((0, "Not Fraud", "tab:blue"), (1, "Fraud", "tab:red")):
        values = _finite(time_values[d.labels == label])
        if values.size:
            ax.hist(values, bins=bins, density=True, histtype="step", color=color, label=name)
    ax.set_xlabel("Time (s)")
    ax.set_ylabel("density")
    ax.set_title("Credit card transactions time density plot")
    ax.legend()
    return fig


def build_fraud_time_amount_figure(d: Dataset) -> Figure:
    """不正取引だけを Time と Amount で散布図にする。"""
    fraud = np.flatnonzero(d.labels == 1)
    rows = d.rows(fraud)
    rows = rows[np.isfinite(rows[:, [data.TIME_INDEX, data.AMOUNT_INDEX]]).all(axis=1)]
    fig = Figure(figsize=(8.0, 4.0))
    ax = fig.add_subplot()
    ax.scatter(rows[:, data.TIME_INDEX], rows[:, data.AMOUNT_INDEX], s=8, color="tab:red")
    ax.set_xlabel("Time (s)")
    ax.set_ylabel("Amount")
    ax.set_title("Fraudulent transactions over time and amount")
    return fig


def build_fraud_by_hour_figure(stats: ClassStats) -> Figure:
    fig = Figure(figsize=(8.0, 4.0))
    ax = fig.add_subplot()
    ax.bar(range(24), stats.fraud_by_hour, color="tab:red")
    ax.set_xticks(range(0, 24, 2))
    ax.set_xlabel("hour of day")
    ax.set_ylabel("fraud transactions")
    ax.set_title("Fraud by hour")
    return fig


def build_class_figure(stats: ClassStats) -> Figure:
    fig = Figure(figsize=(5.0, 4.0))
    ax = fig.add_subplot()
    bars = ax.bar([0, 1], [stats.n_nonfraud, stats.n_fraud], color=["tab:blue", "tab:red"])
    ax.bar_label(bars)
    ax.set_xticks([0, 1], ["0 (Not Fraud)", "1 (Fraud)"])
    ax.set_ylabel("transactions")
    ax.set_title("Class distributions")
    return fig


def emit_data_charts(d: Dataset, out_dir: Union[str, Path]) -> List[Path]:
    """可視化の SVG をまとめて書き出す。ファイル名は DATA_CHARTS + .svg。"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = data.class_stats(d)
    figures = {
        "columns": build_column_figure(d),
        "time_density": build_time_density_figure(d),
        "fraud_time_amount": build_fraud_time_amount_figure(d),
        "fraud_by_hour": build_fraud_by_hour_figure(stats),
        "classes": build_class_figure(stats),
    }
    paths = []
    for name in DATA_CHARTS:
        path = out_dir / f"{name}.svg"
        figures[name].savefig(path, format="svg")
        paths.append(path)
    logger.info("wrote %d data charts for %d rows to %s", len(paths), d.n, out_dir)
    return paths
