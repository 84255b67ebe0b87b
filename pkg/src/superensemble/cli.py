"""Command-line driver: ``superensemble {train,predict,rank-features,benchmark}``.

Exit status: 0 ok, 1 usage, 2 input or data problem, 3 training failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .data import DataError, load_csv, load_schema, stratified_split
from .ensemble import (ModelFormatError, PipelineConfig, dumps, fit_superensemble, load_model,
                       predict_superensemble)
from .evaluation import EvalReport, auc, confusion, default_classifiers, emit_report, run_benchmark
from .rbfn import CLASS_WEIGHTS, DEFAULT_K_GRID, RbfTrainConfig
from .tree import Criterion, fit_tree, rank_features

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FIT = 0, 1, 2, 3
CRITERIA = ("hellinger", "hellinger-as-printed", "gini", "entropy")
_DEFAULT_RBFN = RbfTrainConfig()
_DEFAULT_PIPELINE = PipelineConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this contract reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    data: tuple
    schema: object  # one path, or a tuple of per-dataset paths for benchmark
    model: Optional[str]
    seed: int
    criteria: tuple
    pipeline: PipelineConfig
    repeats: int
    fmt: str
    out: Optional[str]


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _hidden_grid(text: str) -> tuple:
    try:
        grid = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not grid or min(grid) < 1:
        raise argparse.ArgumentTypeError("hidden-unit counts must be positive")
    return grid


def _add_model_flags(p, multi_criteria: bool = False):
    p.add_argument("--seed", type=int, default=0, help="seed for splits, k-means and weight initialization")
    if multi_criteria:
        p.add_argument("--criterion", nargs="+", choices=CRITERIA, default=["hellinger"],
                       help="tree split criteria to benchmark; the first one also drives the superensemble")
    else:
        p.add_argument("--criterion", choices=CRITERIA, default="hellinger", help="tree split criterion")
    p.add_argument("--minsplit-frac", type=float, default=_DEFAULT_PIPELINE.minsplit_fraction,
                   help="minimum node size as a fraction of the training rows")
    p.add_argument("--top-m", type=_positive_int, default=_DEFAULT_PIPELINE.top_m,
                   help="keep the m most important tree features; unset keeps every feature the tree uses")
    p.add_argument("--hidden-grid", type=_hidden_grid, default=",".join(map(str, DEFAULT_K_GRID)),
                   help="candidate hidden-unit counts, comma-separated")
    p.add_argument("--lr-w", type=_positive_float, default=_DEFAULT_RBFN.lr_w, help="learning rate for weights")
    p.add_argument("--lr-c", type=_positive_float, default=_DEFAULT_RBFN.lr_c, help="learning rate for centers")
    p.add_argument("--lr-sigma", type=_positive_float, default=_DEFAULT_RBFN.lr_sigma,
                   help="learning rate for widths")
    p.add_argument("--iters", type=_positive_int, default=_DEFAULT_RBFN.max_iters,
                   help="gradient-descent iterations per hidden-unit count")
    p.add_argument("--class-weight", choices=CLASS_WEIGHTS, default=_DEFAULT_RBFN.class_weight,
                   help="per-class weighting of the network's squared error")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="superensemble", formatter_class=fmt,
                     description="Hellinger decision tree + RBF network classifier for imbalanced binary data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("train", formatter_class=fmt, help="fit a model and write it to a file",
                       description="Fit on a seeded 50:25:25 split (validation picks the hidden-unit count).")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--schema", required=True, help="schema descriptor")
    p.add_argument("--model", required=True, help="output model file")
    _add_model_flags(p)

    p = sub.add_parser("predict", formatter_class=fmt, help="label rows with a saved model")
    p.add_argument("--data", required=True, help="CSV with the model's feature columns (label optional)")
    p.add_argument("--model", required=True, help="model file written by train")
    p.add_argument("--schema", default=None, help="optional schema; must match the one stored in the model")
    p.add_argument("--out", default=None, help="write labels here instead of standard output")

    p = sub.add_parser("rank-features", formatter_class=fmt, help="print tree feature importances",
                       description="Grow the tree on every row and list features by normalized importance.")
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--schema", required=True, help="schema descriptor")
    p.add_argument("--criterion", choices=CRITERIA, default="hellinger", help="tree split criterion")
    p.add_argument("--minsplit-frac", type=float, default=_DEFAULT_PIPELINE.minsplit_fraction,
                   help="minimum node size as a fraction of the rows")
    p.add_argument("--top-m", type=_positive_int, default=None, help="print at most m features")

    p = sub.add_parser("benchmark", formatter_class=fmt, help="repeated-split AUC report",
                       description="Tree, standalone network and superensemble on repeated stratified splits. "
                                   "Each dataset's schema defaults to the CSV path with a .schema suffix.")
    p.add_argument("data", nargs="*", help="dataset CSV files")
    p.add_argument("--data", dest="data_opt", action="append", default=[], help="additional dataset CSV")
    p.add_argument("--schema", action="append", default=[],
                   help="schema for the dataset in the same position (repeatable)")
    p.add_argument("--repeats", type=_positive_int, default=5, help="number of random splits")
    p.add_argument("--format", dest="fmt", choices=("table", "csv"), default="table", help="report format")
    p.add_argument("--out", default=None, help="write the report here instead of standard output")
    _add_model_flags(p, multi_criteria=True)
    return parser


def make_config(args) -> CliConfig:
    """Validate flag combinations before any data is touched."""
    cmd = args.command
    criteria = getattr(args, "criterion", "hellinger")
    criteria = tuple(Criterion.parse(c) for c in ([criteria] if isinstance(criteria, str) else criteria))
    frac = getattr(args, "minsplit_frac", _DEFAULT_PIPELINE.minsplit_fraction)
    if not 0 < frac <= 1:
        raise UsageError(f"--minsplit-frac must be in (0, 1], got {frac}")
    rbfn = _DEFAULT_RBFN
    if hasattr(args, "lr_w"):
        rbfn = RbfTrainConfig(lr_w=args.lr_w, lr_c=args.lr_c, lr_sigma=args.lr_sigma, max_iters=args.iters,
                              k_grid=args.hidden_grid, seed=args.seed, class_weight=args.class_weight)
    seed = getattr(args, "seed", 0)
    pipeline = PipelineConfig(criteria[0], frac, getattr(args, "top_m", None), rbfn, seed)
    if cmd == "benchmark":
        data = tuple(args.data) + tuple(args.data_opt)
        if not data:
            raise UsageError("benchmark needs at least one dataset path")
        if len(args.schema) > len(data):
            raise UsageError(f"{len(args.schema)} schemas given for {len(data)} datasets")
        if len(set(criteria)) != len(criteria):
            raise UsageError("--criterion lists a criterion twice")
        schema = tuple(args.schema)
    else:
        data = (args.data,)
        schema = args.schema
    return CliConfig(cmd, data, schema, getattr(args, "model", None), seed, criteria, pipeline,
                     getattr(args, "repeats", 5), getattr(args, "fmt", "table"), getattr(args, "out", None))


def _err(message: str):
    print(f"superensemble: {message}", file=sys.stderr)


def _check_writable(path: str):
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK) or Path(path).is_dir():
        raise DataError(f"cannot write to {path}")


def _write_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_train(cfg: CliConfig) -> int:
    try:
        _check_writable(cfg.model)
        dataset = load_csv(cfg.data[0], load_schema(cfg.schema))
        split = stratified_split(dataset, seed=cfg.seed)
    except DataError as exc:
        _err(str(exc))
        return EXIT_DATA
    try:
        model = fit_superensemble(dataset, split.train, split.validation, cfg.pipeline)
        pred = predict_superensemble(model, dataset, split.validation)
    except (ValueError, ArithmeticError) as exc:
        _err(f"training failed: {exc}")
        return EXIT_FIT
    try:
        _write_text(cfg.model, dumps(model))
    except DataError as exc:
        _err(str(exc))
        return EXIT_DATA
    names = dataset.schema.names
    print("selected features: " + ", ".join(names[j] for j in model.selected_features))
    print(f"hidden units: {model.net.k}")
    cm = confusion(dataset.y[split.validation], pred)
    print(f"validation AUC: {auc(cm):.4f}")
    return EXIT_OK


def cmd_predict(cfg: CliConfig) -> int:
    try:
        model = load_model(cfg.model)
    except OSError as exc:
        _err(f"cannot read model {cfg.model}: {exc.strerror or exc}")
        return EXIT_DATA
    except ModelFormatError as exc:
        _err(str(exc))
        return EXIT_DATA
    try:
        if cfg.schema is not None and load_schema(cfg.schema).fingerprint() != model.schema.fingerprint():
            raise DataError(f"schema {cfg.schema} does not match the model's schema")
        dataset = load_csv(cfg.data[0], model.schema, require_label=False, classes=model.classes)
        pred = predict_superensemble(model, dataset)
        text = "".join(f"{label}\n" for label in dataset.label_names(pred))
        if cfg.out is not None:
            _write_text(cfg.out, text)
        else:
            sys.stdout.write(text)
    except DataError as exc:
        _err(str(exc))
        return EXIT_DATA
    if dataset.y is not None:
        cm = confusion(dataset.y, pred)
        stream = sys.stdout if cfg.out is not None else sys.stderr
        print(f"positive class: {model.classes[0]}", file=stream)
        print(cm, file=stream)
        try:
            print(f"AUC: {auc(cm):.4f}", file=stream)
        except ValueError as exc:
            print(f"AUC: undefined ({exc})", file=stream)
    return EXIT_OK


def cmd_rank_features(cfg: CliConfig) -> int:
    try:
        dataset = load_csv(cfg.data[0], load_schema(cfg.schema))
        if len(set(dataset.y.tolist())) < 2:
            raise DataError("ranking needs both classes present")
    except DataError as exc:
        _err(str(exc))
        return EXIT_DATA
    tree = fit_tree(dataset, criterion=cfg.criteria[0],
                    minsplit=cfg.pipeline.minsplit(dataset.n))
    if not rank_features(tree):
        print("notice: the tree is a single leaf, so no feature has positive importance")
        return EXIT_OK
    # every feature, unused ones last with importance 0
    imp = tree.importances
    order = sorted(range(dataset.d), key=lambda j: (-imp[j], j))[:cfg.pipeline.top_m]
    width = max(len(dataset.schema.names[j]) for j in order)
    for j in order:
        print(f"{dataset.schema.names[j]:<{width}}  {tree.importances[j]:.6f}")
    return EXIT_OK


def cmd_benchmark(cfg: CliConfig) -> int:
    classifiers = default_classifiers(cfg.pipeline, cfg.criteria)
    report = EvalReport()
    failed = 0
    for i, path in enumerate(cfg.data):
        schema_path = cfg.schema[i] if i < len(cfg.schema) else str(Path(path).with_suffix(".schema"))
        try:
            dataset = load_csv(path, load_schema(schema_path))
            report.merge(run_benchmark(dataset, classifiers, cfg.repeats, cfg.seed))
        except DataError as exc:
            _err(f"{path}: {exc}")
            failed += 1
        except (ValueError, ArithmeticError) as exc:
            _err(f"{path}: benchmark failed: {exc}")
            failed += 1
    if report.results:
        text = emit_report(report, cfg.fmt)
        if cfg.out is not None:
            try:
                _write_text(cfg.out, text)
            except DataError as exc:
                _err(str(exc))
                return EXIT_DATA
        else:
            sys.stdout.write(text)
    return EXIT_DATA if failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
    except (UsageError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        _err(str(exc))
        return EXIT_USAGE
    if cfg.subcommand == "train":
        return cmd_train(cfg)
    if cfg.subcommand == "predict":
        return cmd_predict(cfg)
    if cfg.subcommand == "rank-features":
        return cmd_rank_features(cfg)
    return cmd_benchmark(cfg)


if __name__ == "__main__":
    sys.exit(main())
