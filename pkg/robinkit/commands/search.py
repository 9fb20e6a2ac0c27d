"""
search: Nelder-Mead hunt for configurations that shrink an inequality's slack.
"""

import argparse
import logging

from robinkit.artifacts import load_model
from robinkit.commands import CommandResult
from robinkit.config import get_settings
from robinkit.errors import InvalidInputError
from robinkit.models import SearchProblem
from robinkit.search import minimize_slack, scan_objective

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser("search", parents=parents, help="Extremal configuration search")
    parser.add_argument("--config", required=True, help="Search problem (JSON)")
    parser.add_argument("--iters", type=int, default=1000, help="Simplex iteration budget")
    parser.add_argument("--scan", type=int, default=None, metavar="INDEX",
                        help="Also scan this variable over its bounds")
    parser.add_argument("--samples", type=int, default=1000, help="Points on the scan line")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    problem = load_model(args.config, SearchProblem)
    if args.iters < 1:
        raise InvalidInputError("--iters must be at least 1")
    seed = get_settings().seed
    result = minimize_slack(problem, seed, args.iters)
    payload = result.model_dump()
    payload["seed"] = seed

    if args.scan is not None:
        best_x, best_value = scan_objective(problem, args.scan, args.samples, base=result.best)
        payload["scan"] = {"index": args.scan, "best": best_x, "best_objective": best_value}

    return CommandResult(
        payload=payload,
        summary=(
            f"{problem.objective.value}: best {result.best_objective:.10g} "
            f"(slack {result.slack:.6g}) after {result.iterations} iterations"
        ),
        inputs=[args.config],
        csv_header=["iteration", "objective", "value", "feasible"],
        csv_rows=[[t.iteration, repr(t.objective), repr(t.value), t.feasible] for t in result.trace],
    )
