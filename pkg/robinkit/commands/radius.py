"""
radius: Robin (or harmonic) radius of a domain document at a point.
"""

import argparse
import logging

from robinkit.artifacts import load_domain_document
from robinkit.commands import CommandResult, parse_vector
from robinkit.errors import DiscretizationError, InvalidInputError
from robinkit.evaluators import GridGreenEvaluator, make_evaluator
from robinkit.geometry import domain_dimension, make_constants
from robinkit.models import BallDomain, ChargeConfig

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser("radius", parents=parents, help="Robin radius r_Γ(D, z)")
    parser.add_argument("--config", default=None, help="Domain document (JSON)")
    parser.add_argument("--center", default=None, help="Ball center when no --config is given")
    parser.add_argument("--radius", type=float, default=1.0, help="Ball radius when no --config is given")
    parser.add_argument("--point", required=True, help="Evaluation point, comma-separated")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    inputs = []
    if args.config:
        domain = load_domain_document(args.config)
        inputs.append(args.config)
    else:
        if not args.center:
            raise InvalidInputError("either --config or --center is required")
        domain = BallDomain(center=parse_vector(args.center), radius=args.radius)

    point = parse_vector(args.point)
    n = domain_dimension(domain) if isinstance(domain, BallDomain) else 3
    if len(point) != n:
        raise InvalidInputError(f"--point has {len(point)} coordinates, expected {n}")
    c = make_constants(n)

    cfg = ChargeConfig(points=[point], weights=[1.0])
    g = make_evaluator(domain, cfg, c)
    diagonal = g.diagonal(point)
    if diagonal >= 0.0:
        raise DiscretizationError(f"regular part at the point is {diagonal:.6g} >= 0; no real radius")
    value = g.robin_radius(point)
    backend = "grid" if isinstance(g, GridGreenEvaluator) else "closed_form"
    h = g.domain.h if backend == "grid" else None
    logger.info(f"Radius at {point}: {value:.10g} ({backend})")
    return CommandResult(
        payload={"point": point, "radius": value, "regular_part": diagonal, "backend": backend, "h": h},
        summary=f"r = {value:.10g} ({backend})",
        inputs=inputs,
        csv_header=["radius", "regular_part", "backend", "h"],
        csv_rows=[[repr(value), repr(diagonal), backend, h]],
    )
