"""コマンドラインの入口。

    python -m fraudbench validate creditcard.csv
    python -m fraudbench bench --config bench.conf --precision half16 --output half16.json
    python -m fraudbench compare single32.json half16.json --chart timing.svg
    python -m fraudbench plot creditcard.csv --out-dir charts
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from fraudbench import bench, data, lowprec
from fraudbench.config import configure_logging
from fraudbench.errors import FraudBenchError, InvalidConfig

logger = logging.getLogger(__name__)

# bench のフラグ → 設定キー
_BENCH_FLAGS = {
    "csv": "csv_path",
    "synth_n": "synth_n",
    "synth_fraud_rate": "synth_fraud_rate",
    "synth_separation": "synth_separation",
    "synth_seed": "synth_seed",
    "precision": "precision",
    "rounding": "rounding",
    "resample": "resample",
    "smote_k": "smote_k",
    "quantize_order": "quantize_order",
    "train_fraction": "train_fraction",
    "split_seed": "split_seed",
    "stratify": "stratify",
    "repetitions": "repetitions",
    "threshold": "threshold",
    "n_trees": "n_trees",
    "max_depth": "max_depth",
    "features_per_split": "features_per_split",
    "criterion": "criterion",
    "forest_seed": "forest_seed",
    "n_jobs": "n_jobs",
    "output": "output",
}


def _add_precision(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--precision", choices=[k.value for k in lowprec.FormatKind], default="single32")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraudbench", description="low-precision fraud detection benchmark")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="audit a credit-card CSV")
    p.add_argument("csv", type=Path)
    _add_precision(p)

    p = sub.add_parser("stats", help="class statistics of a CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("plot", help="write data visualization charts (SVG)")
    p.add_argument("csv", type=Path)
    p.add_argument("--out-dir", type=Path, default=Path("charts"))
    _add_precision(p)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("out", type=Path)
    p.add_argument("--n", type=int, default=50_000)
    p.add_argument("--fraud-rate", type=float, default=0.0017)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="run the benchmark pipeline")
    p.add_argument("--config", type=Path)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--csv")
    p.add_argument("--synth-n")
    p.add_argument("--synth-fraud-rate")
    p.add_argument("--synth-separation")
    p.add_argument("--synth-seed")
    p.add_argument("--precision", choices=[k.value for k in lowprec.FormatKind])
    p.add_argument("--rounding", choices=[r.value for r in lowprec.RoundingMode])
    p.add_argument("--resample", choices=["none", "under", "over", "smote"])
    p.add_argument("--smote-k")
    p.add_argument("--quantize-order", choices=[o.value for o in bench.QuantizeOrder])
    p.add_argument("--train-fraction")
    p.add_argument("--split-seed")
    p.add_argument("--stratify", action="store_true", default=None, help="split each class separately")
    p.add_argument("--repetitions")
    p.add_argument("--threshold")
    p.add_argument("--n-trees")
    p.add_argument("--max-depth")
    p.add_argument("--features-per-split")
    p.add_argument("--criterion", choices=["gini", "entropy"])
    p.add_argument("--forest-seed")
    p.add_argument("--n-jobs")
    p.add_argument("--output")
    p.add_argument("--format", choices=[f.value for f in bench.OutputFormat], default="json")
    p.add_argument("--chart", type=Path, help="write an SVG timing chart")
    p.add_argument("--store", action="store_true", help="save the report in the run store")
    p.add_argument("--label")

    p = sub.add_parser("compare", help="compare two JSON reports")
    p.add_argument("baseline", type=Path)
    p.add_argument("candidate", type=Path)
    p.add_argument("--json", action="store_true")
    p.add_argument("--chart", type=Path)

    p = sub.add_parser("serve", help="serve stored runs over HTTP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    sub.add_parser("runs", help="list stored runs")
    return parser


# --------------------------------------------------
# サブコマンド
# --------------------------------------------------

def _cmd_validate(args) -> int:
    dataset = data.load_csv(args.csv, lowprec.get_format(args.precision))
    print(data.format_audit(data.validate(dataset)))
    return 0


def _cmd_stats(args) -> int:
    stats = data.class_stats(data.load_csv(args.csv))
    if args.json:
        print(stats.model_dump_json(indent=2))
        return 0
    for key, value in stats.model_dump().items():
        print(f"{key:<16}{value}")
    return 0


def _cmd_plot(args) -> int:
    dataset = data.load_csv(args.csv, lowprec.get_format(args.precision))
    for path in bench.emit_data_charts(dataset, args.out_dir):
        print(f"wrote {path}")
    return 0


def _cmd_synth(args) -> int:
    dataset = data.synth_generate(args.n, args.fraud_rate, args.separation, args.seed)
    data.write_csv(dataset, args.out)
    n0, n1 = dataset.class_counts()
    print(f"wrote {dataset.n} rows ({n1} fraud, {n0} non-fraud) to {args.out}")
    return 0


def _bench_overrides(args) -> Dict[str, object]:
    """優先順位は 設定ファイル < 個別のフラグ < --set。"""
    overrides: Dict[str, object] = {}
    for attr, key in _BENCH_FLAGS.items():
        value = getattr(args, attr)
        if value is not None:
            overrides[key] = value
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidConfig(item, "expected KEY=VALUE")
        overrides[key.strip()] = value.strip()
    return overrides


def _cmd_bench(args) -> int:
    config = bench.load_bench_config(args.config, _bench_overrides(args))
    report = bench.run_pipeline(config)
    print(bench.render_text(report), end="")
    if config.output is not None:
        bench.emit_report(report, args.format, config.output)
    if args.chart is not None:
        bench.emit_timing_chart([report], args.chart)
    if args.store:
        from fraudbench import database, services

        database.init_db()
        db = database.SessionLocal()
        try:
            summary = services.save_report(db, report, args.label)
        finally:
            db.close()
        print(f"stored as run {summary['id']}")
    return 0


def _cmd_compare(args) -> int:
    result = bench.compare(bench.load_report(args.baseline), bench.load_report(args.candidate))
    if args.json:
        print(result.model_dump_json(indent=2))
    else:
        print(bench.render_compare_text(result), end="")
    if args.chart is not None:
        bench.emit_timing_chart([result.baseline, result.candidate], args.chart)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("fraudbench.main:app", host=args.host, port=args.port)
    return 0


def _cmd_runs(args) -> int:
    from fraudbench import database, services

    database.init_db()
    db = database.SessionLocal()
    try:
        runs = services.get_runs(db)
    finally:
        db.close()
    for run in runs:
        print(json.dumps(run, default=str))
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "stats": _cmd_stats,
    "plot": _cmd_plot,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
    "compare": _cmd_compare,
    "serve": _cmd_serve,
    "runs": _cmd_runs,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return _COMMANDS[args.command](args)
    except FraudBenchError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
