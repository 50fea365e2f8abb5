"""Command-line interface: Monte-Carlo sweeps, dictionary cache, self-test."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import report
from .dictionary import (DictionaryBudgetError, build_dictionary, cache_path,
                         load_dictionary, save_dictionary)
from .experiment import ConfigError, ExperimentConfig, load_config, run_experiment
from .selftest import run_selftest

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpe",
        description="Blind radar parameter estimation over AFDM links.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte-Carlo RMSE sweep")
    run_p.add_argument("--config", required=True, help="JSON experiment configuration")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--output", help="override the config output path")
    run_p.add_argument("--trials", type=int, help="override the config trial count")
    run_p.add_argument("--plot-dir",
                       help="also write per-curve data files and figures here")
    run_p.add_argument("--diagnostics", help="write per-trial JSON lines here")
    run_p.add_argument("--strict", action="store_true",
                       help="exit with status 3 if any solve hit its iteration cap")
    run_p.add_argument("--quiet", action="store_true", help="suppress progress output")

    cache_p = sub.add_parser("dict-cache", help="prebuild the dictionary cache")
    cache_p.add_argument("--config", required=True)
    cache_p.add_argument("--cache-dir",
                         help="cache directory (default: the output file's directory)")

    sub.add_parser("selftest", help="run built-in consistency checks")

    report_p = sub.add_parser("report",
                              help="re-render curve files and figures from a result CSV")
    report_p.add_argument("csv", help="result file written by 'rpe run'")
    report_p.add_argument("--outdir", help="destination directory (default: CSV's directory)")
    return parser


def _load_and_override(args) -> ExperimentConfig:
    config = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "output", None):
        overrides["output_path"] = args.output
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if overrides:
        try:
            config = replace(config, **overrides)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    return config


def _dictionary_for(config, cache_dir=None):
    directory = Path(cache_dir) if cache_dir else Path(config.output_path).parent
    cached = load_dictionary(cache_path(directory, config.afdm, config.grid),
                             config.afdm, config.grid)
    if cached is not None:
        return cached
    return build_dictionary(config.afdm, config.grid)


def _cmd_run(args) -> int:
    config = _load_and_override(args)
    progress = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    dictionary = _dictionary_for(config)
    outcome = run_experiment(config, dictionary=dictionary, progress=progress,
                             diagnostics_path=args.diagnostics)
    csv_path = report.write_csv(outcome.records, config.output_path)
    if not args.quiet:
        print(f"wrote {csv_path}", file=sys.stderr)
    if args.plot_dir:
        for path in report.write_report(outcome.records, args.plot_dir):
            if not args.quiet:
                print(f"wrote {path}", file=sys.stderr)
    if args.strict and outcome.nonconverged_runs > 0:
        print(f"{outcome.nonconverged_runs} solves hit their iteration cap",
              file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_dict_cache(args) -> int:
    config = _load_and_override(args)
    directory = Path(args.cache_dir) if args.cache_dir else Path(config.output_path).parent
    target = cache_path(directory, config.afdm, config.grid)
    if load_dictionary(target, config.afdm, config.grid) is not None:
        print(f"cache up to date: {target}", file=sys.stderr)
        return EXIT_OK
    dictionary = build_dictionary(config.afdm, config.grid)
    save_dictionary(dictionary, target)
    print(f"wrote {target}", file=sys.stderr)
    return EXIT_OK


def _cmd_selftest(_args) -> int:
    return EXIT_OK if run_selftest(print) else EXIT_FAILURE


def _cmd_report(args) -> int:
    try:
        records = report.read_csv(args.csv)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.outdir if args.outdir else Path(args.csv).parent
    for path in report.write_report(records, out_dir):
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "dict-cache": _cmd_dict_cache,
    "selftest": _cmd_selftest,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DictionaryBudgetError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
