from fractions import Fraction

import numpy as np
import pytest

from fraudbench import metrics
from fraudbench.errors import InvalidLabels, LengthMismatch, SingleClass
from fraudbench.metrics import ConfusionMatrix


def _brute_force_auc(actual, scores):
    """正例・負例の全ペアを数える参照実装。"""
    pos = [s for a, s in zip(actual, scores) if a == 1]
    neg = [s for a, s in zip(actual, scores) if a == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


# --------------------------------------------------
# 混同行列
# --------------------------------------------------

def test_confusion_counts():
    actual = [1, 1, 0, 0, 1, 0]
    predicted = [1, 0, 0, 1, 1, 0]
    assert metrics.confusion(actual, predicted) == ConfusionMatrix(tp=2, fp=1, fn=1, tn=2)


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        metrics.confusion([0, 1], [0])


def test_confusion_rejects_other_labels():
    with pytest.raises(InvalidLabels):
        metrics.confusion([0, 2], [0, 1])


def test_confusion_matrix_rejects_negative():
    with pytest.raises(ValueError):
        ConfusionMatrix(tp=-1, fp=0, fn=0, tn=0)


# --------------------------------------------------
# 派生指標
# --------------------------------------------------

def test_decision_tree_grid():
    r = metrics.derive_metrics(ConfusionMatrix(tp=156, fp=19, fn=51, tn=24))
    assert r.accuracy == pytest.approx(0.72)
    assert r.precision == pytest.approx(0.891, abs=5e-4)
    assert r.fdr == pytest.approx(0.109, abs=5e-4)
    assert r.for_ == pytest.approx(0.68)
    assert r.npv == pytest.approx(0.32)
    assert r.prevalence == pytest.approx(0.828)
    assert r.recall == pytest.approx(0.754, abs=5e-4)
    assert r.fpr == pytest.approx(0.442, abs=5e-4)
    assert r.fnr == pytest.approx(0.246, abs=5e-4)
    assert r.tnr == pytest.approx(0.558, abs=5e-4)
    assert r.lr_plus == pytest.approx(1.71, abs=5e-3)
    assert r.lr_minus == pytest.approx(0.44, abs=5e-3)


def test_second_grid():
    r = metrics.derive_metrics(ConfusionMatrix(tp=163, fp=12, fn=48, tn=27))
    assert r.accuracy == pytest.approx(0.76)
    assert r.precision == pytest.approx(0.931, abs=5e-4)
    assert r.lr_plus == pytest.approx(2.51, abs=5e-3)
    assert r.lr_minus == pytest.approx(0.33, abs=5e-3)


def test_f1_is_standard_harmonic_mean():
    r = metrics.derive_metrics(ConfusionMatrix(tp=156, fp=19, fn=51, tn=24))
    assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))
    assert r.f1 == pytest.approx(0.817, abs=5e-4)


def test_unbalanced_run():
    r = metrics.derive_metrics(ConfusionMatrix(tp=116, fp=9, fn=32, tn=85286))
    assert r.accuracy == pytest.approx(0.9995201479, abs=1e-10)
    assert r.per_class_precision[0] == pytest.approx(0.99962493, abs=1e-8)
    assert r.per_class_precision[1] == pytest.approx(0.928)
    assert r.per_class_recall[1] == pytest.approx(0.78378, abs=1e-5)
    assert r.g_mean == pytest.approx((r.recall * r.tnr) ** 0.5)


def test_perfect_matrix_has_undefined_ratio():
    r = metrics.derive_metrics(ConfusionMatrix(tp=5, fp=0, fn=0, tn=7))
    assert (r.accuracy, r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0, 1.0)
    assert r.fpr == 0.0
    assert r.lr_plus is None
    assert r.lr_minus == 0.0


def test_empty_positive_class_is_undefined():
    r = metrics.derive_metrics(ConfusionMatrix(tp=0, fp=0, fn=0, tn=10))
    assert r.precision is None
    assert r.recall is None
    assert r.f1 is None
    assert r.g_mean is None
    assert r.accuracy == 1.0


def test_f1_undefined_when_precision_and_recall_are_zero():
    r = metrics.derive_metrics(ConfusionMatrix(tp=0, fp=3, fn=4, tn=10))
    assert (r.precision, r.recall) == (0.0, 0.0)
    assert r.f1 is None
    assert f"F1 {metrics.UNDEFINED}" in metrics.format_table(r)


def test_exact_complements():
    rng = np.random.default_rng(4)
    for _ in range(100):
        tp, fp, fn, tn = (int(v) for v in rng.integers(1, 1000, size=4))
        m = metrics.exact_metrics(ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn))
        assert m["recall"] + m["fnr"] == 1
        assert m["fpr"] + m["tnr"] == 1
        assert m["precision"] + m["fdr"] == 1
        assert m["npv"] + m["for"] == 1
        assert isinstance(m["accuracy"], Fraction)


def test_swapped_exchanges_classes():
    c = ConfusionMatrix(tp=116, fp=9, fn=32, tn=85286)
    r = metrics.derive_metrics(c)
    s = metrics.derive_metrics(c.swapped())
    assert s.precision == r.npv
    assert s.recall == r.tnr


# --------------------------------------------------
# ROC-AUC
# --------------------------------------------------

def test_auc_small_example():
    assert metrics.roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == 0.75


def test_auc_matches_pair_count():
    rng = np.random.default_rng(10)
    for _ in range(500):
        n = int(rng.integers(2, 101))
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            continue
        # 同順位も混ぜる
        s = rng.integers(0, 20, size=n) / 20.0
        assert metrics.roc_auc(y, s) == pytest.approx(_brute_force_auc(y.tolist(), s.tolist()))


def test_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(2)
    y = rng.integers(0, 2, size=200)
    s = rng.random(200)
    assert metrics.roc_auc(y, s) == pytest.approx(metrics.roc_auc(y, np.exp(3 * s) - 1))


def test_auc_swapping_labels():
    rng = np.random.default_rng(6)
    y = rng.integers(0, 2, size=300)
    s = rng.random(300)
    assert metrics.roc_auc(1 - y, s) == pytest.approx(1 - metrics.roc_auc(y, s))


def test_auc_constant_scores_is_half():
    assert metrics.roc_auc([0, 1, 0, 1], [0.3] * 4) == 0.5


def test_auc_single_class():
    with pytest.raises(SingleClass):
        metrics.roc_auc([1, 1, 1], [0.2, 0.5, 0.9])


def test_auc_rejects_nan():
    with pytest.raises(ValueError):
        metrics.roc_auc([0, 1], [0.1, float("nan")])


def test_auc_length_mismatch():
    with pytest.raises(LengthMismatch):
        metrics.roc_auc([0, 1, 1], [0.1, 0.2])


# --------------------------------------------------
# 出力
# --------------------------------------------------

def test_text_grid():
    r = metrics.derive_metrics(ConfusionMatrix(tp=156, fp=19, fn=51, tn=24))
    text = metrics.format_table(r, digits=2)
    assert "TP 156" in text
    assert "Accuracy 0.72" in text
    assert "FOR 0.68" in text
    assert "LR+ 1.71" in text
    assert "NPV 0.32" in text


def test_undefined_is_rendered_explicitly():
    r = metrics.derive_metrics(ConfusionMatrix(tp=5, fp=0, fn=0, tn=7))
    assert f"LR+ {metrics.UNDEFINED}" in metrics.format_table(r)


def test_json_report_round_trip():
    r = metrics.derive_metrics(ConfusionMatrix(tp=116, fp=9, fn=32, tn=85286))
    text = metrics.format_table(r, fmt="json")
    assert '"for"' in text
    assert metrics.parse_report(text) == r


def test_unknown_table_format():
    r = metrics.derive_metrics(ConfusionMatrix(tp=1, fp=1, fn=1, tn=1))
    with pytest.raises(ValueError):
        metrics.format_table(r, fmt="xml")


def test_classification_summary():
    r = metrics.derive_metrics(ConfusionMatrix(tp=116, fp=9, fn=32, tn=85286))
    text = metrics.classification_summary(r)
    assert "0.92800" in text
    assert "0.78378" in text
