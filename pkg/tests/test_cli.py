import json
import math

import pytest

from fraudbench.cli import main

SMALL = [
    "--synth-n", "400",
    "--synth-fraud-rate", "0.1",
    "--synth-separation", "4.0",
    "--n-trees", "4",
    "--repetitions", "1",
]


def _without_timing(path):
    report = json.loads(path.read_text(encoding="utf-8"))
    report.pop("fit")
    report.pop("predict")
    return report


def test_validate_prints_audit(tmp_path, capsys):
    csv = tmp_path / "cc.csv"
    assert main(["synth", str(csv), "--n", "300", "--fraud-rate", "0.1"]) == 0
    assert main(["validate", str(csv)]) == 0
    out = capsys.readouterr().out
    assert "Non-Null Count" in out
    assert "300 non-null  float32" in out


def test_stats_json(tmp_path, capsys):
    csv = tmp_path / "cc.csv"
    main(["synth", str(csv), "--n", "200", "--fraud-rate", "0.1"])
    capsys.readouterr()
    assert main(["stats", str(csv), "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert (stats["n_total"], stats["n_fraud"]) == (200, 20)


def test_unknown_flag_exits_with_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--no-such-flag"])
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_file_exits_nonzero(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.csv")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_bad_config_value_exits_nonzero(capsys):
    assert main(["bench", *SMALL, "--set", "n_trees=zero"]) == 1
    assert "n_trees" in capsys.readouterr().err


def test_set_needs_key_value(capsys):
    assert main(["bench", "--set", "n_trees"]) == 1


def test_bench_twice_is_identical_except_timing(tmp_path):
    out = tmp_path / "r.json"
    assert main(["bench", *SMALL, "--output", str(out)]) == 0
    first = _without_timing(out)
    assert main(["bench", *SMALL, "--output", str(out)]) == 0
    assert _without_timing(out) == first


def test_bench_writes_text_and_chart(tmp_path, capsys):
    out = tmp_path / "r.txt"
    chart = tmp_path / "t.svg"
    assert main(["bench", *SMALL, "--format", "text", "--output", str(out), "--chart", str(chart)]) == 0
    assert out.read_text(encoding="utf-8").startswith("Random Forest Classifier")
    assert "<svg" in chart.read_text(encoding="utf-8")
    assert "ROC AUC" in capsys.readouterr().out


def test_compare_reports(tmp_path, capsys):
    single = tmp_path / "single.json"
    half = tmp_path / "half.json"
    main(["bench", *SMALL, "--output", str(single)])
    main(["bench", *SMALL, "--precision", "half16", "--output", str(half)])
    capsys.readouterr()
    assert main(["compare", str(single), str(half), "--json"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["memory_ratio"] == 2.0


def test_store_and_list_runs(capsys):
    assert main(["bench", *SMALL, "--store", "--label", "cli-run"]) == 0
    assert "stored as run" in capsys.readouterr().out
    assert main(["runs"]) == 0
    assert "cli-run" in capsys.readouterr().out


def test_set_overrides_typed_flag(tmp_path):
    out = tmp_path / "r.json"
    assert main(["bench", *SMALL, "--set", "n_trees=2", "--output", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["config"]["forest"]["n_trees"] == 2


def test_bench_stratify_flag(tmp_path):
    out = tmp_path / "r.json"
    assert main(["bench", *SMALL, "--stratify", "--output", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["config"]["stratify"] is True
    # 各クラスを別々に 0.7 で切る
    assert report["train_class_counts"] == [math.floor(360 * 0.7), math.floor(40 * 0.7)]


def test_plot_writes_data_charts(tmp_path, capsys):
    csv = tmp_path / "cc.csv"
    main(["synth", str(csv), "--n", "300", "--fraud-rate", "0.1"])
    out_dir = tmp_path / "charts"
    assert main(["plot", str(csv), "--out-dir", str(out_dir)]) == 0
    for name in ("columns", "time_density", "fraud_time_amount", "fraud_by_hour", "classes"):
        assert "<svg" in (out_dir / f"{name}.svg").read_text(encoding="utf-8")
    assert capsys.readouterr().out.count("wrote ") == 5
