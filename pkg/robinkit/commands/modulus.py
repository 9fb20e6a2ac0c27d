"""
modulus: reduced modulus M(D, Γ, Z, δ) of a charge configuration, with an
optional trace of the renormalized Dirichlet integral over exclusion radii.
"""

import argparse
import logging

from robinkit.artifacts import load_model
from robinkit.commands import CommandResult
from robinkit.evaluators import make_evaluator
from robinkit.models import ModulusRequest
from robinkit.moduli import modulus_limit_estimate, reduced_modulus

logger = logging.getLogger(__name__)


def register(subparsers, parents):
    parser = subparsers.add_parser("modulus", parents=parents, help="Reduced modulus of a configuration")
    parser.add_argument("--config", required=True, help="Modulus request (JSON)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    request = load_model(args.config, ModulusRequest)
    g = make_evaluator(request.domain, request.charges, h=request.h)
    result = reduced_modulus(g, request.charges)
    payload = result.model_dump()
    rows = [["M", repr(result.M), repr(result.error_bar)]]

    if request.radii:
        trace = modulus_limit_estimate(g, request.charges, request.radii)
        payload["trace"] = trace.model_dump()
        rows.extend(["trace", repr(r), repr(v)] for r, v in zip(trace.radii, trace.values))
        rows.append(["limit", repr(trace.limit), repr(trace.error_estimate)])

    return CommandResult(
        payload=payload,
        summary=f"M = {result.M:.10g} ± {result.error_bar:.1e} (m={request.charges.m})",
        inputs=[args.config],
        csv_header=["quantity", "value", "error"],
        csv_rows=rows,
    )
