"""
verify: numerical checks of the composition, extension and disjoint-ball
inequalities. Every case produces VerificationReports; a report whose slack
is negative beyond its error bar turns into exit code 4 in main.
"""

import argparse
import logging

import numpy as np

from robinkit.artifacts import REPORT_COLUMNS, load_model, report_row
from robinkit.commands import CommandResult
from robinkit.config import get_settings
from robinkit.errors import InvalidInputError
from robinkit.models import (
    CompositionMode,
    DecompositionSpec,
    DisjointBallsSpec,
    ExtensionSpec,
    KufarevSpec,
)
from robinkit.verifier import (
    corollary_2_5_limit_trace,
    random_disjoint_balls,
    verify_batch,
    verify_composition,
    verify_corollary_2_5,
    verify_extension_monotonicity,
    verify_kufarev_3d,
)

logger = logging.getLogger(__name__)

CASE_ALIASES = {
    "cor2.5": "disjoint-balls",
    "kufarev": "two-point-neumann",
}
CASES = ("disjoint-balls", "composition", "extension", "two-point-neumann", "random-balls")


def register(subparsers, parents):
    parser = subparsers.add_parser("verify", parents=parents, help="Verify an inequality on a configuration")
    parser.add_argument("--case", required=True, choices=CASES + tuple(CASE_ALIASES))
    parser.add_argument("--config", default=None, help="Case document (JSON)")
    parser.add_argument("--mode", choices=[m.value for m in CompositionMode], default=None,
                        help="Override the composition mode of the document")
    parser.add_argument("--count", type=int, default=20, help="Configurations for random-balls")
    parser.add_argument("--balls", type=int, default=3, help="Balls per random configuration")
    parser.add_argument("--dimension", type=int, default=3, help="Space dimension for random-balls")
    parser.set_defaults(handler=run)


def _require_config(args):
    if not args.config:
        raise InvalidInputError(f"--config is required for case {args.case}")
    return args.config


def _random_configs(args):
    rng = np.random.default_rng(get_settings().seed)
    configs = []
    for _ in range(args.count):
        balls, points = random_disjoint_balls(rng, args.balls, n=args.dimension)
        weights = rng.uniform(-1.0, 1.0, size=args.balls).tolist()
        configs.append((balls, points, weights))
    return configs


def run(args: argparse.Namespace) -> CommandResult:
    case = CASE_ALIASES.get(args.case, args.case)
    inputs = []
    extra = {}

    if case == "random-balls":
        if args.count < 1 or args.balls < 1:
            raise InvalidInputError("--count and --balls must be positive")
        reports = verify_batch(_random_configs(args))
    else:
        path = _require_config(args)
        inputs.append(path)
        if case == "disjoint-balls":
            spec = load_model(path, DisjointBallsSpec)
            reports = [verify_corollary_2_5(spec.balls, spec.points, spec.weights)]
            if spec.rhos:
                trace = corollary_2_5_limit_trace(spec.balls, spec.points, spec.weights, spec.rhos)
                extra["trace"] = trace.model_dump()
        elif case == "composition":
            spec = load_model(path, DecompositionSpec)
            mode = CompositionMode(args.mode) if args.mode else None
            reports = [verify_composition(spec, mode)]
        elif case == "extension":
            spec = load_model(path, ExtensionSpec)
            reports = [verify_extension_monotonicity(spec.inner, spec.outer, spec.charges, spec.direction, spec.h)]
        else:
            spec = load_model(path, KufarevSpec)
            reports = [verify_kufarev_3d(spec.d1, spec.d2, spec.a1, spec.a2)]

    if len(reports) == 1:
        payload = reports[0].model_dump()
    else:
        payload = {"reports": [r.model_dump() for r in reports]}
    payload.update(extra)

    failing = sum(not r.holds for r in reports)
    worst = min(r.slack for r in reports)
    logger.info(f"Verified {len(reports)} configuration(s) for {case}; {failing} failing")
    summary = f"{case}: slack {worst:.10g}" if len(reports) == 1 else f"{case}: {len(reports)} runs, min slack {worst:.6g}"
    return CommandResult(
        payload=payload,
        summary=f"{summary}, {'holds' if failing == 0 else 'VIOLATED'}",
        inputs=inputs,
        csv_header=REPORT_COLUMNS,
        csv_rows=[report_row(r) for r in reports],
        reports=reports,
    )
