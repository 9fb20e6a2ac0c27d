"""
Command-line entry point for robinkit.
Parses global flags, configures logging, dispatches to the subcommand handlers
and writes JSON/CSV results with a run manifest.
"""

import argparse
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from robinkit import __version__
from robinkit.artifacts import build_manifest, write_json, write_rows_csv
from robinkit.commands import grid_solve, kernel, modulus, parse_spacing, radius, search, verify
from robinkit.config import override_settings, reset_settings
from robinkit.errors import InequalityViolationError, InvalidInputError, RobinKitError

logger = logging.getLogger(__name__)

SUBCOMMANDS = (kernel, radius, modulus, verify, search, grid_solve)


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="JSON output file")
    common.add_argument("--csv", default=None, help="CSV output file")
    common.add_argument("--tol", type=float, default=None, help="Solver residual tolerance (default 1e-8)")
    common.add_argument("--grid-h", default=None, help="Voxel spacing, e.g. 1/32")
    common.add_argument("--max-iter", type=int, default=None, help="Solver iteration cap (default 100000)")
    common.add_argument("--seed", type=int, default=None, help="Random seed (default 42)")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robinkit",
        description="Robin functions, reduced moduli and extremal decomposition checks",
    )
    parser.add_argument("--version", action="version", version=f"robinkit {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    parents = [_global_flags()]
    for command in SUBCOMMANDS:
        command.register(subparsers, parents)
    return parser


def format_validation_error(e: ValidationError) -> str:
    """One `key.path: message` item per error."""
    items = []
    for error in e.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<document>"
        items.append(f"{location}: {error['msg']}")
    return "; ".join(items)


def _parameters(args: argparse.Namespace, settings) -> Dict[str, Any]:
    parameters = {k: v for k, v in vars(args).items() if k != "handler"}
    parameters.update(settings.model_dump())
    return parameters


def run(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    reset_settings()
    try:
        grid_h = parse_spacing(args.grid_h) if args.grid_h else None
        settings = override_settings(
            tol=args.tol,
            grid_h=grid_h,
            max_iter=args.max_iter,
            seed=args.seed,
            log_level=args.log_level,
        )
    except ValidationError as e:
        print(f"error: invalid flag: {format_validation_error(e)}", file=sys.stderr)
        return InvalidInputError.exit_code
    except RobinKitError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code

    logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    started = datetime.now(timezone.utc)

    try:
        result = args.handler(args)
    except RobinKitError as e:
        logger.error(f"{args.subcommand} failed: {e.detail}")
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        message = format_validation_error(e)
        logger.error(f"Invalid configuration: {message}")
        print(f"error: invalid configuration: {message}", file=sys.stderr)
        return InvalidInputError.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return InvalidInputError.exit_code

    manifest = build_manifest(args.subcommand, _parameters(args, settings), result.inputs, started)
    payload = dict(result.payload)
    payload["manifest"] = manifest
    if args.out:
        write_json(args.out, payload)
    if args.csv:
        if result.csv_writer is not None:
            result.csv_writer(args.csv)
        elif result.csv_header is not None:
            write_rows_csv(args.csv, result.csv_header, result.csv_rows)
    if result.writer is not None:
        result.writer()
    print(result.summary)

    exit_code = result.exit_code
    if any(not report.holds for report in result.reports):
        logger.warning(f"{sum(not r.holds for r in result.reports)} report(s) violate the inequality beyond the error bar")
        exit_code = max(exit_code, InequalityViolationError.exit_code)
    return exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
