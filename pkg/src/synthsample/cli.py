"""Command-line entry point: ``synthsample {aggregate,resample,audit,evaluate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .core import DataError, aggregate_rating, load_csv, partition, write_csv
from .divergence import DivergenceError, audit
from .evaluation import BASELINE, EvaluationError, SplitSpec, run_methods
from .forest import ForestError, ForestParams
from .neighbors import NeighborError
from .oversamplers import Method, SamplerConfig, SamplerError, resample

log = logging.getLogger("synthsample")

RATER_COLUMNS = ("r1", "r2", "r3", "r4")
# columns added by `resample`; ignored when its output is read back in
PROVENANCE_COLUMNS = ("synthetic", "method", "parent_row")

_USER_ERRORS = (DataError, SamplerError, NeighborError, DivergenceError, EvaluationError,
                ForestError, OSError)


def _existing_file(value: str) -> Path:
    p = Path(value)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {value}")
    return p


def _non_negative(value: str) -> int:
    v = int(value)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _methods(value: str) -> list[str]:
    names = [m.strip().lower() for m in value.split(",") if m.strip()]
    if names == ["all"]:
        return [m.value for m in Method]
    valid = {m.value for m in Method} | {BASELINE}
    bad = [m for m in names if m not in valid]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown method(s) {bad}; choose from {sorted(valid)} or 'all'")
    return names


def cmd_aggregate(args) -> int:
    with args.input.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in RATER_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{args.input}: missing rater column(s) {missing}")
        if args.label_col in header:
            raise DataError(f"{args.input}: column {args.label_col!r} already exists")
        rows = list(reader)
    if not rows:
        raise DataError(f"{args.input}: no data rows")
    for i, row in enumerate(rows, start=1):
        try:
            ratings = [int(row[c]) for c in RATER_COLUMNS]
        except (TypeError, ValueError):
            raise DataError(f"row {i}: rater cells must be integers, got "
                            f"{[row[c] for c in RATER_COLUMNS]}") from None
        try:
            row[args.label_col] = aggregate_rating(ratings)
        except DataError as e:
            raise DataError(f"row {i}: {e}") from None
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=[*header, args.label_col], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    log.info("aggregated %d rows -> %s", len(rows), args.out)
    return 0


def _sampler_config(args, method=None) -> SamplerConfig:
    return SamplerConfig(method=method or Method.SMOTE, k=args.k, seed=args.seed,
                         lambda_mode=args.lambda_mode,
                         b2_out_of_class_lambda_max=args.b2_lambda_max,
                         single_member_fallback=args.single_member_fallback,
                         scale=not args.no_scale)


def cmd_resample(args) -> int:
    table = load_csv(args.input, args.label_col, ignore_columns=PROVENANCE_COLUMNS)
    cfg = _sampler_config(args, args.method)
    balanced, batch = resample(table, cfg)
    counts = {c: n for c, n in partition(balanced).counts.items() if n}
    if len(set(counts.values())) != 1:
        raise SamplerError(f"output is not balanced: {counts}")
    n, m = len(table), len(batch)
    extra = {
        "synthetic": [0] * n + [1] * m,
        "method": ["original"] * n + batch.methods.tolist(),
        "parent_row": list(range(n)) + batch.parents.tolist(),
    }
    write_csv(args.out, balanced, args.label_col, extra)
    log.info("%s: %d original + %d synthetic rows -> %s", cfg.method.value, n, m, args.out)
    return 0


def cmd_audit(args) -> int:
    original = load_csv(args.original, args.label_col, ignore_columns=PROVENANCE_COLUMNS)
    resampled = load_csv(args.resampled, args.label_col, ignore_columns=PROVENANCE_COLUMNS)
    report = audit(original, resampled, bins=args.bins,
                   keep_histograms=args.histograms is not None)
    report.write(args.out)
    if args.histograms is not None:
        report.write_histograms(args.histograms)
    log.info("overall mean JS similarity %.4f -> %s", report.overall_mean, args.out)
    return 0


def cmd_evaluate(args) -> int:
    table = load_csv(args.input, args.label_col, ignore_columns=PROVENANCE_COLUMNS)
    spec = SplitSpec(train_fraction=args.train_frac, repeats=args.repeats, seed=args.seed)
    forest = ForestParams(n_trees=args.trees, mtry=args.mtry, max_depth=args.max_depth,
                          min_samples_leaf=args.min_samples_leaf)
    methods = [m for m in args.methods if m != BASELINE]
    report = run_methods(table, spec, methods, _sampler_config(args), forest)
    written = report.write(args.out)
    for name, r in report.reports.items():
        sens = ", ".join(f"{c}: {v:.2f}" for c, v in r.sensitivity.items())
        log.info("%-7s accuracy %.2f | sensitivity %s", name, r.accuracy, sens)
    log.info("wrote %s", ", ".join(str(p) for p in written))
    return 0


def _add_sampler_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=_positive, default=5, help="neighbour count K (default 5)")
    p.add_argument("--lambda-mode", choices=("per_feature", "per_sample"), default="per_feature")
    p.add_argument("--b2-lambda-max", type=float, default=0.5,
                   help="upper bound of lambda toward out-of-class neighbours (b2)")
    p.add_argument("--single-member-fallback", action="store_true",
                   help="duplicate one-member minority classes instead of failing")
    p.add_argument("--no-scale", action="store_true",
                   help="use raw features for neighbour distances (default: min-max scaled)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthsample", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="collapse rater columns r1..r4 into one label")
    p.add_argument("--input", type=_existing_file, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--label-col", default="label")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("resample", help="balance a labelled CSV with one oversampler")
    p.add_argument("--input", type=_existing_file, required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--method", choices=[m.value for m in Method], required=True)
    p.add_argument("--seed", type=_non_negative, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_sampler_options(p)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("audit", help="JS similarity of per-class feature distributions")
    p.add_argument("--original", type=_existing_file, required=True)
    p.add_argument("--resampled", type=_existing_file, required=True)
    p.add_argument("--label-col", default="label")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", type=Path, required=True, help=".csv or .json")
    p.add_argument("--histograms", type=Path, default=None,
                   help="optional JSON dump of every compared histogram pair")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("evaluate", help="repeated stratified hold-out with a random forest")
    p.add_argument("--input", type=_existing_file, required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--methods", type=_methods, required=True,
                   help="comma list of none,smote,b1,b2,adasyn,random or 'all'")
    p.add_argument("--repeats", type=_positive, default=30)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--trees", type=_positive, default=100)
    p.add_argument("--mtry", type=_positive, default=None)
    p.add_argument("--max-depth", type=_positive, default=None)
    p.add_argument("--min-samples-leaf", type=_positive, default=1)
    p.add_argument("--seed", type=_non_negative, required=True)
    p.add_argument("--out", type=Path, required=True, help=".csv or .json")
    _add_sampler_options(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _USER_ERRORS as e:
        print(f"synthsample {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
