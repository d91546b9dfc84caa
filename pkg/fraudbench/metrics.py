"""混同行列と派生指標、ROC-AUC。

- 陽性クラスは 1（不正）。行 = 実際、列 = 予測
- 分母が 0 の指標は None（未定義）。0 や NaN とは区別する
- per_class_* は [クラス0, クラス1] の順
"""

import logging
import math
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import rankdata

from fraudbench.errors import InvalidLabels, LengthMismatch, SingleClass

logger = logging.getLogger(__name__)

UNDEFINED = "—"


class ConfusionMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    tn: int = Field(ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """陽性クラスを 0 に入れ替えた行列。"""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


class MetricsReport(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    confusion: ConfusionMatrix
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]
    tnr: Optional[float]
    fdr: Optional[float]
    for_: Optional[float] = Field(alias="for")
    npv: Optional[float]
    prevalence: Optional[float]
    f1: Optional[float]
    g_mean: Optional[float]
    lr_plus: Optional[float]
    lr_minus: Optional[float]
    per_class_precision: Tuple[Optional[float], Optional[float]]
    per_class_recall: Tuple[Optional[float], Optional[float]]


def _as_labels(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    bad = np.setdiff1d(np.unique(arr), [0, 1])
    if bad.size:
        raise InvalidLabels(bad.tolist())
    return arr.astype(np.int8)


def confusion(actual, predicted) -> ConfusionMatrix:
    a = np.asarray(actual)
    p = np.asarray(predicted)
    if a.shape[0] != p.shape[0]:
        raise LengthMismatch(a.shape[0], p.shape[0])
    a = _as_labels(a, "actual")
    p = _as_labels(p, "predicted")
    return ConfusionMatrix(
        tp=int(np.count_nonzero((a == 1) & (p == 1))),
        fp=int(np.count_nonzero((a == 0) & (p == 1))),
        fn=int(np.count_nonzero((a == 1) & (p == 0))),
        tn=int(np.count_nonzero((a == 0) & (p == 0))),
    )


def _ratio(num, den) -> Optional[Fraction]:
    if num is None or den is None or den == 0:
        return None
    return Fraction(num) / Fraction(den)


def exact_metrics(c: ConfusionMatrix) -> Dict[str, Optional[Fraction]]:
    """有理数のまま計算した指標（g_mean を除く）。"""
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    tpr = _ratio(tp, tp + fn)
    fpr = _ratio(fp, fp + tn)
    fnr = _ratio(fn, tp + fn)
    tnr = _ratio(tn, fp + tn)
    ppv = _ratio(tp, tp + fp)
    # P = R = 0 のときは 0/0 なので未定義
    f1 = None if ppv is None or tpr is None or ppv + tpr == 0 else 2 * ppv * tpr / (ppv + tpr)
    return {
        "accuracy": _ratio(tp + tn, c.total),
        "precision": ppv,
        "recall": tpr,
        "fpr": fpr,
        "fnr": fnr,
        "tnr": tnr,
        "fdr": _ratio(fp, tp + fp),
        "for": _ratio(fn, fn + tn),
        "npv": _ratio(tn, fn + tn),
        "prevalence": _ratio(tp + fn, c.total),
        "f1": f1,
        "lr_plus": _ratio(tpr, fpr),
        "lr_minus": _ratio(fnr, tnr),
    }


def _float(value: Optional[Fraction]) -> Optional[float]:
    return None if value is None else float(value)


def derive_metrics(c: ConfusionMatrix) -> MetricsReport:
    exact = exact_metrics(c)
    tpr, tnr = exact["recall"], exact["tnr"]
    g_mean = None if tpr is None or tnr is None else math.sqrt(tpr * tnr)
    values = {key: _float(value) for key, value in exact.items()}
    return MetricsReport(
        confusion=c,
        g_mean=g_mean,
        per_class_precision=(values["npv"], values["precision"]),
        per_class_recall=(values["tnr"], values["recall"]),
        **values,
    )


def roc_auc(actual, scores) -> float:
    """順位（Mann-Whitney U）による AUC。同順位は平均順位で 1/2 として数える。"""
    y = np.asarray(actual)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape[0] != s.shape[0]:
        raise LengthMismatch(y.shape[0], s.shape[0])
    y = _as_labels(y, "actual")
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass([1] if n_pos else ([0] if n_neg else []))
    ranks = rankdata(s, method="average")
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


# --------------------------------------------------
# 出力
# --------------------------------------------------

def _fmt(value: Optional[float], digits: int) -> str:
    return UNDEFINED if value is None else f"{value:.{digits}f}"


def _render_text(r: MetricsReport, digits: int) -> str:
    c = r.confusion

    def cell(name: str, value: Optional[float]) -> str:
        return f"{name} {_fmt(value, digits)}"

    rows = [
        ["", "Predicted positive", "Predicted negative", "", ""],
        ["Actual positive", f"TP {c.tp}", f"FN {c.fn}", cell("TPR", r.recall), cell("FNR", r.fnr)],
        ["Actual negative", f"FP {c.fp}", f"TN {c.tn}", cell("FPR", r.fpr), cell("TNR", r.tnr)],
        [cell("Prevalence", r.prevalence), cell("PPV", r.precision), cell("FOR", r.for_),
         cell("LR+", r.lr_plus), cell("LR-", r.lr_minus)],
        [cell("Accuracy", r.accuracy), cell("FDR", r.fdr), cell("NPV", r.npv),
         cell("F1", r.f1), cell("G-mean", r.g_mean)],
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(text.ljust(w) for text, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines)


def format_table(report: MetricsReport, fmt: str = "text", digits: int = 3) -> str:
    if fmt == "json":
        return report.model_dump_json(by_alias=True, indent=2)
    if fmt == "text":
        return _render_text(report, digits)
    raise ValueError(f"unknown format {fmt!r}")


def parse_report(text: str) -> MetricsReport:
    return MetricsReport.model_validate_json(text)


def classification_summary(report: MetricsReport, digits: int = 5) -> str:
    lines = [f"{'class':<8}{'precision':>12}{'recall':>12}"]
    for label in (0, 1):
        lines.append(
            f"{label:<8}{_fmt(report.per_class_precision[label], digits):>12}"
            f"{_fmt(report.per_class_recall[label], digits):>12}"
        )
    lines.append(f"{'accuracy':<8}{_fmt(report.accuracy, digits):>12}")
    return "\n".join(lines)
