"""
grid-solve: finite-difference regular part for one pole, exported as JSON
summary, optional flat binary field (--field-out) and optional CSV cells.
"""

import argparse
import logging

import numpy as np

from robinkit.artifacts import (
    decode_voxel_document,
    load_domain_document,
    write_field_binary,
    write_field_csv,
)
from robinkit.commands import CommandResult, parse_spacing, parse_vector
from robinkit.config import get_settings
from robinkit.errors import InvalidInputError, NonConvergenceError
from robinkit.geometry import make_constants, voxelize
from robinkit.models import BallDomain
from robinkit.solver import interpolate, solve_robin_regular_part

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser("grid-solve", parents=parents, help="Solve for the regular part on a grid")
    parser.add_argument("--config", required=True, help="Domain document (JSON)")
    parser.add_argument("--point", required=True, help="Pole z0, comma-separated")
    parser.add_argument("--h", default=None, help="Voxel spacing for ball documents (overrides --grid-h)")
    parser.add_argument("--field-out", default=None, help="Flat binary output for the regular part")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    settings = get_settings()
    doc = load_domain_document(args.config)
    if isinstance(doc, BallDomain):
        h = parse_spacing(args.h) if args.h else (doc.h or settings.grid_h)
        domain = voxelize(doc, h)
    else:
        domain = decode_voxel_document(doc)

    z0 = parse_vector(args.point)
    if len(z0) != 3:
        raise InvalidInputError("grid solves take a 3D pole")
    c = make_constants(3)
    field, report = solve_robin_regular_part(domain, z0, c, settings.tol, settings.max_iter)
    w0 = float(interpolate(field, z0)[0])
    radius = (-w0 / c.lam) ** -1.0 if w0 < 0.0 else None
    if radius is None:
        logger.warning(f"Regular part at the pole is {w0:.6g} >= 0; no Robin radius reported")

    payload = {
        "report": {"iterations": report.iterations, "residual": report.residual, "converged": report.converged},
        "h": domain.h,
        "shape": list(domain.shape),
        "cells": domain.cell_count,
        "regular_part_at_pole": w0,
        "robin_radius": radius,
    }

    def write_field():
        if args.field_out:
            write_field_binary(args.field_out, domain, field.as_array(fill=np.nan))

    status = "converged" if report.converged else "NOT converged"
    return CommandResult(
        payload=payload,
        summary=f"{status} in {report.iterations} iterations, residual {report.residual:.2e}, w(z0) = {w0:.8g}",
        inputs=[args.config],
        csv_writer=lambda path: write_field_csv(path, domain, field.values),
        writer=write_field,
        exit_code=0 if report.converged else NonConvergenceError.exit_code,
    )
