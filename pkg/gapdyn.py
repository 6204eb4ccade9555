#!/usr/bin/env python3
"""
gapdyn - impute gaps in hourly station series and refine them with sparse dynamics.

Commands:
    ingest      validate a station CSV and write it back in canonical form
    inject      mask observed cells (random, block or mixed) and save the record
    impute      fill gaps with SI, KNN, SI-SINDy or KNN-SINDy
    sindy       fit a one-step dynamics model, or predict with one
    experiment  run the full method comparison over missing levels
    report      re-emit a stored report as JSON or CSV
    synth       write the seeded synthetic station dataset

Standard output carries only data and output paths; diagnostics go to
standard error. Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from core import GapDynError, SeriesMatrix, TimeRange
from dynamics import LibrarySpec, SindyModel, fit, predict_series, refine_imputation
from imputation import (
    DEFAULT_LAMBDA_GRID, KnnConfig, SoftImputeConfig,
    inject_random, inject_blocks, inject_mixed, knn_impute, select_lambda, soft_impute_run
)
from ingest import (
    fit_normalization, normalize, denormalize,
    parse_timestamp, read_csv_file, write_csv, write_csv_file, summarize
)
from pipeline import (
    YEAR_2016, ExperimentRunner, ReportFormat, SyntheticConfig, emit_report, generate_dataset, level_label,
    load_report, write_series_csv
)
from pipeline.runner import __version__
from utils import setup_logging
from utils.config import Config, ensure_directories, env_seed, parse_time_range

logger = logging.getLogger("gapdyn")

HYBRID_METHODS = ("si-sindy", "knn-sindy")


def _fraction(text: str) -> float:
    """argparse type: fraction strictly between 0 and 1."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid fraction: {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"fraction must be in (0, 1), got {value}")
    return value


def _share(text: str) -> float:
    """argparse type: share in [0, 1]."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid share: {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"share must be in [0, 1], got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {value}")
    return value


def _time_range(text: str) -> TimeRange:
    try:
        return parse_time_range(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _levels(text: str) -> list:
    return [_fraction(part) for part in text.split(",") if part.strip()]


def _lambda(text: str):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lambda must be a number or 'auto', got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"lambda must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapdyn",
        description="gapdyn: imputation of hourly station series with sparse-dynamics refinement")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--verbose', '-v', action='store_true', help="Enable verbose logging")
    parser.add_argument('--log-file', help="Also log to this rotating file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="Validate a station CSV and write it in canonical form")
    p.add_argument("input", help="Station CSV")
    p.add_argument("-o", "--output", help="Canonical CSV (default: standard output)")

    p = sub.add_parser("inject", help="Mask observed cells for scoring")
    p.add_argument("input", help="Station CSV")
    p.add_argument("-o", "--output", required=True, help="Masked CSV")
    p.add_argument("--record", help="Injection record JSON (default: <output>.injection.json)")
    p.add_argument("--fraction", type=_fraction, required=True, help="Share of observed cells to mask")
    p.add_argument("--regime", choices=["random", "block", "mixed"], default="random")
    p.add_argument("--min-len", type=_positive_int, default=6, help="Shortest block (hours)")
    p.add_argument("--max-len", type=_positive_int, default=72, help="Longest block (hours)")
    p.add_argument("--block-share", type=_share, default=0.5, help="Share of cells from blocks (mixed)")
    p.add_argument("--seed", type=_seed, default=None, help="Random seed (default: $GAPDYN_SEED or 0)")

    p = sub.add_parser("impute", help="Fill gaps in a station CSV")
    p.add_argument("input", help="Station CSV")
    p.add_argument("-o", "--output", required=True, help="Completed CSV")
    p.add_argument("--method", choices=["si", "knn"] + list(HYBRID_METHODS), required=True)
    p.add_argument("--k", type=_positive_int, default=5, help="KNN neighbours")
    p.add_argument("--lambda", dest="lambda_", type=_lambda, default=1.0,
                   help="Soft-impute shrinkage, or 'auto' for holdout selection")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--model", help="Dynamics model JSON (hybrid methods)")
    p.add_argument("--train-range", type=_time_range, help="Fit dynamics on START/END of the input (hybrid methods)")
    p.add_argument("--degree", type=_positive_int, default=2)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--seed", type=_seed, default=None, help="Seed for --lambda auto")

    p = sub.add_parser("sindy", help="Fit or apply a one-step dynamics model")
    sindy_sub = p.add_subparsers(dest="sindy_command", required=True)
    q = sindy_sub.add_parser("fit", help="Fit a model on a training CSV")
    q.add_argument("input", help="Training CSV")
    q.add_argument("-o", "--output", required=True, help="Model JSON")
    q.add_argument("--train-range", type=_time_range, help="Restrict fitting to START/END")
    q.add_argument("--degree", type=_positive_int, default=2)
    q.add_argument("--no-constant", action="store_true", help="Drop the constant library term")
    q.add_argument("--threshold", type=float, default=0.05)
    q.add_argument("--ridge", type=float, default=1e-6)
    q.add_argument("--max-rounds", type=_positive_int, default=20)
    q = sindy_sub.add_parser("predict", help="One-step predictions from a model")
    q.add_argument("input", help="State CSV")
    q.add_argument("--model", required=True, help="Model JSON")
    q.add_argument("-o", "--output", required=True, help="Prediction CSV")

    p = sub.add_parser("experiment", help="Run the method comparison over missing levels")
    p.add_argument("--config", help="Experiment JSON (default: experiment_config/experiment.json)")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--input", help="Station CSV covering both ranges")
    source.add_argument("--synthetic", action="store_true", help="Use the seeded synthetic dataset")
    p.add_argument("--levels", type=_levels, help="Comma-separated missing levels, e.g. 0.1,0.3,0.5")
    p.add_argument("--regime", choices=["random", "block", "mixed"])
    p.add_argument("--seed", type=_seed)
    p.add_argument("--workers", type=_positive_int)
    p.add_argument("--train-range", type=_time_range)
    p.add_argument("--eval-range", type=_time_range)
    p.add_argument("--output-dir", help="Directory for report and injection files")
    p.add_argument("--export-series", action="store_true", default=None,
                   help="Also write observed vs. imputed series per level")

    p = sub.add_parser("report", help="Re-emit a stored report")
    p.add_argument("input", help="report.json")
    p.add_argument("--format", choices=[f.value for f in ReportFormat], default="json")
    p.add_argument("-o", "--output", help="Output file (default: standard output)")

    p = sub.add_parser("synth", help="Write the synthetic station dataset")
    p.add_argument("-o", "--output", required=True, help="Station CSV")
    p.add_argument("--years", type=_positive_int, default=2)
    p.add_argument("--stations", type=_positive_int, default=5)
    p.add_argument("--missing", type=float, default=0.03, help="Background missing share")
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--truth", help="Write the generating transition matrix as JSON")

    return parser


def _emit(data: bytes, output: Optional[str]) -> None:
    """Write bytes to a file (and print its path) or to standard output."""
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        with open(output, "wb") as f:
            f.write(data)
        print(output)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_ingest(args) -> int:
    m = read_csv_file(args.input)
    for summary in summarize(m):
        print(summary.describe(), file=sys.stderr)
    _emit(write_csv(m), args.output)
    return 0


def cmd_inject(args) -> int:
    m = read_csv_file(args.input)
    seed = args.seed if args.seed is not None else env_seed()
    if args.regime == "random":
        masked, record = inject_random(m, args.fraction, seed)
    elif args.regime == "block":
        masked, record = inject_blocks(m, args.fraction, args.min_len, args.max_len, seed)
    else:
        masked, record = inject_mixed(m, args.fraction, args.block_share, args.min_len, args.max_len, seed)

    record_path = args.record or f"{args.output}.injection.json"
    write_csv_file(masked, args.output)
    with open(record_path, "w") as f:
        f.write(record.to_json())
    logger.info(f"Injected {len(record)} cells ({args.regime}, seed {seed})")
    print(args.output)
    print(record_path)
    return 0


def _dynamics_for(args, m: SeriesMatrix) -> SindyModel:
    """Load the model file, or fit one on --train-range of the input."""
    if args.model:
        with open(args.model, "rb") as f:
            return SindyModel.from_json(f.read())
    train_raw = m.restrict(args.train_range)
    norm = fit_normalization(train_raw)
    model = fit(normalize(train_raw, norm), LibrarySpec(degree=args.degree), threshold=args.threshold)
    return model.model_copy(update={"normalization": norm})


def cmd_impute(args) -> int:
    m = read_csv_file(args.input)
    model = _dynamics_for(args, m) if args.method in HYBRID_METHODS else None
    norm = model.normalization if model is not None and model.normalization else fit_normalization(m)
    work = normalize(m, norm)

    if args.method.startswith("si"):
        cfg = SoftImputeConfig(tol=args.tol, max_iter=args.max_iter)
        if args.lambda_ == "auto":
            seed = args.seed if args.seed is not None else env_seed()
            lambda_ = select_lambda(work, DEFAULT_LAMBDA_GRID, 0.1, seed, cfg)
        else:
            lambda_ = args.lambda_
        result = soft_impute_run(work, cfg.model_copy(update={"lambda_": lambda_}))
        print(f"si: lambda={lambda_:g} iterations={result.iterations} converged={result.converged} "
              f"final_delta={result.final_delta:.3g}", file=sys.stderr)
        estimate = result.matrix
    else:
        estimate = knn_impute(work, KnnConfig(k=args.k))
        print(f"knn: k={args.k} filled={int((~m.mask).sum())}", file=sys.stderr)

    raw = denormalize(estimate, norm)
    if model is not None:
        # a model without embedded scaling works in the units of its input
        if model.normalization:
            raw = denormalize(refine_imputation(model, estimate, work.missing_cells()), norm)
        else:
            raw = refine_imputation(model, raw, m.missing_cells())
        active = int(np.count_nonzero(model.xi_array))
        print(f"sindy: degree={model.degree} active_terms={active}", file=sys.stderr)

    completed = raw.with_values(np.where(m.mask, m.values, raw.values), mask=np.ones(m.shape, dtype=bool))
    write_csv_file(completed, args.output)
    print(args.output)
    return 0


def cmd_sindy(args) -> int:
    if args.sindy_command == "fit":
        m = read_csv_file(args.input)
        train_raw = m.restrict(args.train_range) if args.train_range else m
        norm = fit_normalization(train_raw)
        spec = LibrarySpec(degree=args.degree, include_constant=not args.no_constant)
        model = fit(normalize(train_raw, norm), spec, args.threshold, args.ridge, args.max_rounds)
        model = model.model_copy(update={"normalization": norm})
        for station, rmse in model.diagnostics.train_rmse.items():
            print(f"{station}: train_rmse={rmse:.4g} terms={model.diagnostics.active_terms[station]}",
                  file=sys.stderr)
        _emit((model.to_json() + "\n").encode("utf-8"), args.output)
        return 0

    with open(args.model, "rb") as f:
        model = SindyModel.from_json(f.read())
    m = read_csv_file(args.input)
    write_csv_file(predict_series(model, m), args.output)
    print(args.output)
    return 0


def _experiment_config(parser, args) -> Config:
    overrides = {
        "input": args.input,
        "missing_levels": args.levels,
        "regime": args.regime,
        "seed": args.seed,
        "workers": args.workers,
        "train_range": args.train_range,
        "eval_range": args.eval_range,
        "output_dir": args.output_dir,
        "export_series": args.export_series,
    }
    try:
        return Config(args.config, overrides)
    except ValueError as e:
        parser.error(str(e))


def cmd_experiment(parser, args) -> int:
    config = _experiment_config(parser, args)
    try:
        cfg = config.experiment_config()
        setup_logging(
            log_level=config.LOG_LEVEL,
            log_file=args.log_file or config.LOG_FILE,
            max_bytes=config.LOG_MAX_BYTES,
            backup_count=config.LOG_BACKUP_COUNT,
            verbose=args.verbose,
            threaded=cfg.workers > 1,
        )
    except (ValidationError, ValueError) as e:
        parser.error(f"invalid experiment configuration: {e}")

    if args.synthetic or (config.INPUT is None and config.SYNTHETIC is not None):
        data = generate_dataset(SyntheticConfig.model_validate(config.SYNTHETIC or {})).matrix
    elif config.INPUT:
        data = read_csv_file(config.INPUT)
    else:
        parser.error("experiment needs --input, --synthetic or an input in the configuration")

    output_dir = Path(config.OUTPUT_DIR)
    ensure_directories(output_dir)

    runner = ExperimentRunner(data, cfg, keep_estimates=config.EXPORT_SERIES)
    report = runner.run()

    written = []
    for fmt in ReportFormat:
        path = output_dir / f"report.{fmt.value}"
        path.write_bytes(emit_report(report, fmt))
        written.append(path)
    for level in cfg.missing_levels:
        record = runner.injections.get(level)
        if record is None:
            continue
        path = output_dir / f"injection_{level_label(level)}.json"
        path.write_text(record.to_json() + "\n")
        written.append(path)
        if config.EXPORT_SERIES:
            truth = runner.eval_raw
            written.append(write_series_csv(truth, runner.estimates.get(level, {}), record,
                                            output_dir / f"series_{level_label(level)}.csv"))

    failed = [f"{r.method.value}@{r.level:g}" for r in report.results if r.error]
    if failed:
        logger.warning(f"Failed cells in report: {', '.join(failed)}")
    for path in written:
        print(path)
    return 0


def cmd_report(args) -> int:
    with open(args.input, "rb") as f:
        report = load_report(f.read())
    _emit(emit_report(report, args.format), args.output)
    return 0


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else env_seed()
    end = parse_timestamp(f"{2016 + args.years}-01-01T00:00")
    cfg = SyntheticConfig(n_stations=args.stations, n_hours=end - YEAR_2016.start,
                          background_missing=args.missing, seed=seed)
    dataset = generate_dataset(cfg)
    write_csv_file(dataset.matrix, args.output)
    print(args.output)
    if args.truth:
        with open(args.truth, "w") as f:
            json.dump({"stations": list(dataset.matrix.station_ids), "dynamics": dataset.dynamics}, f, indent=2)
        print(args.truth)
    return 0


def _error_line(e: Exception) -> str:
    code = e.code if isinstance(e, GapDynError) else type(e).__name__
    message = " ".join(str(e).split())
    return f"gapdyn: error: code={code} message={message}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application.

    Returns:
        Exit code (0 for success, 1 for runtime errors, 2 for usage errors)
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "impute" and args.method in HYBRID_METHODS and not (args.model or args.train_range):
        parser.error(f"--method {args.method} needs --model or --train-range")
    if args.command == "inject" and args.min_len > args.max_len:
        parser.error(f"--min-len ({args.min_len}) must not exceed --max-len ({args.max_len})")

    setup_logging(verbose=args.verbose, log_file=args.log_file)

    try:
        if args.command == "experiment":
            return cmd_experiment(parser, args)
        return {
            "ingest": cmd_ingest,
            "inject": cmd_inject,
            "impute": cmd_impute,
            "sindy": cmd_sindy,
            "report": cmd_report,
            "synth": cmd_synth,
        }[args.command](args)
    except (GapDynError, OSError, ValueError) as e:
        logger.debug("Command failed", exc_info=True)
        print(_error_line(e), file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 1


if __name__ == "__main__":
    sys.exit(main())
