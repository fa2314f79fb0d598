"""Command-line interface.

Subcommands: train, cv, evaluate, predict, synth. Data goes to stdout,
diagnostics to stderr. Exit codes: 0 success, 1 usage error, 2 data error,
3 numeric/training failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .config import build_pipeline_config, parse_config_file
from .data import SplitSpec, load_csv, stratified_split, synth_dataset
from .errors import DataError, TrainingError
from .metrics import TimingReport, capture_timing, render_report
from .pipeline import (
    combined_scores,
    cross_validate,
    evaluate_model,
    load_model,
    save_model,
    train_pipeline,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"onsetml: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


_CONFIG_HELP = (
    "config file: one 'key = value' per line, '#' comments, lists "
    "comma-separated. Keys: train_fraction, folds, seed, zero_as_missing, "
    "selected_columns, svm_c, tolerance, max_passes, l1_lambda, "
    "class_balance, sigma, hidden_size, mlp_hidden, ensemble_size, epochs, "
    "learning_rate, dropout, fusion_weight, threshold, pool_window, "
    "pool_stride. Seed precedence: --seed > config > 42."
)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="onsetml",
        description=(
            "Train, cross-validate and apply the fused RBF-SVM + LSTM/MLP "
            "classifier on CSV datasets (features..., 0/1 label)."
        ),
        epilog=_CONFIG_HELP,
    )
    parser.add_argument("--version", action="version", version=f"onsetml {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_format=True):
        p.add_argument("--config", help=_CONFIG_HELP)
        p.add_argument("--seed", type=int, help="seed override (flag > config > 42)")
        if with_format:
            p.add_argument(
                "--format",
                choices=("json", "table"),
                default="json",
                help="report format on stdout (default json)",
            )
        p.add_argument(
            "--no-header",
            action="store_true",
            help="input CSV has no header row; columns named col_0..col_{n-1}",
        )

    p_train = sub.add_parser(
        "train", help="train on a stratified split, evaluate, write model + report"
    )
    p_train.add_argument("data", help="input CSV (last column is the 0/1 label)")
    p_train.add_argument("--out", default="model.json", help="model output path")
    p_train.add_argument("--report-out", help="also write the JSON report here")
    add_common(p_train)

    p_cv = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p_cv.add_argument("data", help="input CSV")
    p_cv.add_argument("--folds", type=int, help="fold count (default 5)")
    p_cv.add_argument("--out", help="write the JSON report here")
    p_cv.add_argument(
        "--parallel",
        action="store_true",
        help="train folds concurrently; reported numbers are unchanged",
    )
    add_common(p_cv)

    p_eval = sub.add_parser("evaluate", help="evaluate a saved model on a labeled CSV")
    p_eval.add_argument("model", help="model JSON file from train")
    p_eval.add_argument("data", help="input CSV")
    p_eval.add_argument("--out", help="write the JSON report here")
    add_common(p_eval)

    p_pred = sub.add_parser(
        "predict", help="print 'index,score,label' per row of a CSV"
    )
    p_pred.add_argument("model", help="model JSON file from train")
    p_pred.add_argument("data", help="input CSV")
    p_pred.add_argument(
        "--no-header",
        action="store_true",
        help="input CSV has no header row",
    )

    p_synth = sub.add_parser(
        "synth", help="write a synthetic two-Gaussian dataset as CSV"
    )
    p_synth.add_argument("--n", type=int, required=True, help="number of rows")
    p_synth.add_argument("--features", type=int, required=True, help="feature count")
    p_synth.add_argument(
        "--fraction", type=float, default=0.5, help="positive-class fraction"
    )
    p_synth.add_argument(
        "--separation", type=float, default=2.0, help="distance between class means"
    )
    p_synth.add_argument("--seed", type=int, default=42)
    p_synth.add_argument("--out", required=True, help="output CSV path")

    return parser


def _load_config(args):
    values = parse_config_file(args.config) if args.config else {}
    return build_pipeline_config(
        values,
        seed_override=args.seed,
        folds_override=getattr(args, "folds", None),
    )


def _check_writable(path):
    """Reject unusable output paths before any training work starts."""
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise DataError(f"output directory does not exist: {parent}")


def _finalize_report(report, cfg):
    report.seed = cfg.seed
    report.config = cfg.to_dict()
    report.tool_version = __version__
    return report


def _emit_report(report, args, out_path=None):
    text = render_report(report, format=args.format)
    sys.stdout.write(text)
    if out_path:
        Path(out_path).write_text(render_report(report, format="json"))
    for phase, ms in sorted(report.timing.phases_ms.items()):
        print(f"onsetml: {phase} took {ms:.1f} ms", file=sys.stderr)


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    _check_writable(args.out)
    _check_writable(args.report_out)
    data = load_csv(args.data, has_header=not args.no_header)
    train, test = stratified_split(
        data,
        SplitSpec(
            train_fraction=cfg.split.train_fraction,
            seed=cfg.seed,
            stratified=cfg.split.stratified,
        ),
    )
    timing = TimingReport(epochs_elapsed=cfg.neural.epochs)
    with capture_timing(timing, "train"):
        model = train_pipeline(train, cfg)
    save_model(model, args.out)
    report = evaluate_model(model, test, timing=timing)
    _finalize_report(report, cfg)
    _emit_report(report, args, args.report_out)
    print(f"onsetml: model written to {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_cv(args) -> int:
    cfg = _load_config(args)
    _check_writable(args.out)
    data = load_csv(args.data, has_header=not args.no_header)
    report = cross_validate(data, cfg, parallel=args.parallel)
    for fold in report.folds:
        print(
            f"onsetml: fold {fold.fold_index}: "
            f"accuracy={fold.accuracy:.4f} "
            f"train={fold.timing.phases_ms.get('train', 0.0):.1f} ms",
            file=sys.stderr,
        )
    report.tool_version = __version__
    _emit_report(report, args, args.out)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    model = load_model(args.model)
    data = load_csv(args.data, has_header=not args.no_header)
    report = evaluate_model(model, data)
    report.seed = model.seed
    report.config = model.config
    report.tool_version = __version__
    _emit_report(report, args, args.out)
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    try:
        data = load_csv(args.data, has_header=not args.no_header)
    except DataError as exc:
        if "empty dataset" in str(exc):
            return EXIT_OK  # vacuous success: no rows, no lines
        raise
    missing = [c for c in model.column_names if c not in data.column_names]
    if missing:
        raise DataError(f"data is missing model columns: {', '.join(missing)}")
    matched = data.select_columns(list(model.column_names))
    scores = combined_scores(model, matched.values)
    for i, score in enumerate(scores):
        label = int(score >= model.threshold)
        print(f"{i},{float(score)},{label}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    _check_writable(args.out)
    m = synth_dataset(
        n=args.n,
        n_features=args.features,
        positive_fraction=args.fraction,
        separation=args.separation,
        seed=args.seed,
    )
    out = Path(args.out)
    try:
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([*m.column_names, "label"])
            for row, label in zip(m.values, m.labels):
                writer.writerow([float(v) for v in row] + [int(label)])
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from None
    print(f"onsetml: wrote {m.n_samples} rows to {out}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "cv": _cmd_cv,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"onsetml: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"onsetml: training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except ValueError as exc:
        print(f"onsetml: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
