"""
kernel: evaluate one closed-form kernel at a point pair.
"""

import argparse
import logging

from robinkit.commands import CommandResult, parse_vector
from robinkit.errors import InvalidInputError
from robinkit.geometry import make_constants
from robinkit.kernels import (
    ball_green,
    ball_harmonic_radius,
    ball_neumann_3d,
    ball_neumann_regular_diagonal,
    fundamental_solution,
    kufarev_display_rhs_3d,
    neumann_modulus_two_points_3d,
)
from robinkit.models import BallSpec

logger = logging.getLogger(__name__)

KERNEL_TYPES = (
    "fundamental",
    "ball-green",
    "harmonic-radius",
    "neumann",
    "neumann-diagonal",
    "neumann-modulus",
    "display-rhs",
)


def register(subparsers, parents):
    parser = subparsers.add_parser("kernel", parents=parents, help="Evaluate a closed-form kernel")
    parser.add_argument("--type", dest="kernel_type", choices=KERNEL_TYPES, required=True)
    parser.add_argument("--n", type=int, default=3, help="Space dimension")
    parser.add_argument("--center", default=None, help="Ball center, comma-separated")
    parser.add_argument("--radius", type=float, default=1.0, help="Ball radius")
    parser.add_argument("--x", default=None, help="First point, comma-separated")
    parser.add_argument("--y", default=None, help="Second point (pole), comma-separated")
    parser.set_defaults(handler=run)


def _point(raw, name: str, n: int):
    if raw is None:
        raise InvalidInputError(f"--{name} is required for this kernel")
    vector = parse_vector(raw)
    if len(vector) != n:
        raise InvalidInputError(f"--{name} has {len(vector)} coordinates, expected {n}")
    return vector


def run(args: argparse.Namespace) -> CommandResult:
    kind = args.kernel_type
    n = 3 if kind.startswith("neumann") or kind == "display-rhs" else args.n
    c = make_constants(n)
    center = parse_vector(args.center) if args.center else [0.0] * n
    ball = BallSpec(center=center, radius=args.radius)

    if kind == "fundamental":
        value = fundamental_solution(_point(args.x, "x", n), _point(args.y, "y", n), c)
    elif kind == "ball-green":
        value = ball_green(_point(args.x, "x", n), _point(args.y, "y", n), ball, c)
    elif kind == "harmonic-radius":
        value = ball_harmonic_radius(_point(args.y, "y", n), ball, c)
    elif kind == "neumann":
        value = ball_neumann_3d(_point(args.x, "x", n), _point(args.y, "y", n))
    elif kind == "neumann-diagonal":
        value = ball_neumann_regular_diagonal(_point(args.y, "y", n))
    elif kind == "neumann-modulus":
        value = neumann_modulus_two_points_3d(_point(args.x, "x", n), _point(args.y, "y", n))
    else:
        value = kufarev_display_rhs_3d(_point(args.x, "x", n), _point(args.y, "y", n))

    value = float(value)
    logger.info(f"Kernel {kind} evaluated: {value!r}")
    payload = {"type": kind, "n": n, "value": value}
    return CommandResult(
        payload=payload,
        summary=f"{kind} = {value:.10g}",
        csv_header=["type", "n", "value"],
        csv_rows=[[kind, n, repr(value)]],
    )
