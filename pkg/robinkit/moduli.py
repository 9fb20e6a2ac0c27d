"""
Potential functions, reduced moduli and Dirichlet-integral traces.
The asymptotic checks compute I(u, D_r) - λ r^{2-n} Σδ² and the energy
identity for admissible competitors over decreasing exclusion radii.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from robinkit.errors import InvalidInputError, SingularityError
from robinkit.evaluators import GreenEvaluator, GridGreenEvaluator
from robinkit.geometry import contains_points, validate_charge_config
from robinkit.kernels import fundamental_solution_gradient
from robinkit.models import AsymptoticTrace, BallSpec, ChargeConfig, Constants, ModulusResult, PointLike, as_vector
from robinkit.quadrature import (
    ClosedFormFunction,
    QuadDomain,
    QuadratureSettings,
    cell_gradients,
    dirichlet_integral,
)
from robinkit.solver import ScalarField, full_field, interpolate

logger = logging.getLogger(__name__)


def potential_eval(g: GreenEvaluator, cfg: ChargeConfig, x: PointLike) -> float:
    """u(x) = Σ δ_k g(x, z_k)."""
    x = as_vector(x)
    points = cfg.point_array()
    if np.any(np.all(points == x, axis=1)):
        raise SingularityError(f"potential evaluated at the charge point {x.tolist()}")
    return math.fsum(d * float(g.pair(x, z)) for d, z in zip(cfg.weights, points) if d != 0.0)


def _grid_gradient(g: GridGreenEvaluator, cfg: ChargeConfig) -> Callable[[np.ndarray], np.ndarray]:
    components = []
    for field in g.fields:
        grads = cell_gradients(field)
        components.append([ScalarField(field.domain, grads[:, a]) for a in range(3)])
    points = cfg.point_array()

    def gradient(x):
        x = np.atleast_2d(x)
        total = np.zeros_like(x)
        for delta, z, comps in zip(cfg.weights, points, components):
            if delta == 0.0:
                continue
            regular = np.stack([interpolate(c, x) for c in comps], axis=1)
            total += delta * (regular + fundamental_solution_gradient(x, z, g.constants))
        return total

    return gradient


def potential_function(g: GreenEvaluator, cfg: ChargeConfig) -> ClosedFormFunction:
    """u as a function object with value and gradient over arrays of points."""
    points = cfg.point_array()
    weights = cfg.weights

    def value(x):
        x = np.atleast_2d(x)
        total = np.zeros(len(x))
        for delta, z in zip(weights, points):
            if delta != 0.0:
                total += delta * np.asarray(g.pair(x, z))
        return total

    if g.has_gradient:
        def gradient(x):
            x = np.atleast_2d(x)
            total = np.zeros_like(x)
            for delta, z in zip(weights, points):
                if delta != 0.0:
                    total += delta * np.atleast_2d(g.gradient(x, z))
            return total
    elif isinstance(g, GridGreenEvaluator):
        gradient = _grid_gradient(g, cfg)
    else:
        raise InvalidInputError(f"{type(g).__name__} offers no gradient")

    return ClosedFormFunction(value=value, gradient=gradient, singular_points=tuple(tuple(p) for p in points))


def potential_field(g: GridGreenEvaluator, cfg: ChargeConfig) -> ScalarField:
    """u on the grid cells: Σ δ_k (w_k + λ|x - z_k|^{-1})."""
    if not isinstance(g, GridGreenEvaluator):
        raise InvalidInputError("potential fields need a grid evaluator")
    total = np.zeros(g.domain.cell_count)
    for delta, z in zip(cfg.weights, cfg.point_array()):
        total += delta * full_field(g.field(z), g.constants).values
    return ScalarField(g.domain, total)


def reduced_modulus(g: GreenEvaluator, cfg: ChargeConfig) -> ModulusResult:
    """M = Σ_k Σ_l δ_k δ_l g(z_l, z_k) with a_k = Σ_l δ_l g(z_l, z_k)."""
    validate_charge_config(cfg, g.domain, gamma_empty=g.gamma_empty)
    delta = cfg.weight_array()
    matrix = g.pair_matrix(cfg.point_array())
    a = matrix.T @ delta
    terms = np.outer(delta, delta) * matrix.T
    modulus = math.fsum(delta * a)
    double_sum = math.fsum(terms.ravel())
    if abs(modulus - double_sum) > 1e-12 * max(1.0, abs(modulus)):
        logger.warning(f"Modulus sums disagree: {modulus!r} vs {double_sum!r}")
    error_bar = g.accuracy * float(np.sum(np.abs(delta))) ** 2
    logger.info(f"Reduced modulus M={modulus:.12g} for m={cfg.m} (error bar {error_bar:.1e})")
    return ModulusResult(M=modulus, pair_terms=terms.tolist(), a=a.tolist(), error_bar=error_bar)


def richardson_limit(radii: Sequence[float], values: Sequence[float], order: float = 1.0) -> float:
    """Two-point extrapolation T(r) = L + C r^p from the two smallest radii."""
    if len(values) == 0:
        raise InvalidInputError("no values to extrapolate")
    if len(values) == 1:
        return float(values[0])
    r1, r2 = float(radii[-2]) ** order, float(radii[-1]) ** order
    t1, t2 = float(values[-2]), float(values[-1])
    return (r1 * t2 - r2 * t1) / (r1 - r2)


def _check_radii(radii: Sequence[float]):
    if not radii:
        raise InvalidInputError("at least one radius is required")
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise InvalidInputError("radii must be positive and strictly decreasing")


# cells shrink at most this much along a trace
TRACE_REFINEMENT_CAP = 4.0


def _trace_settings(settings: Optional[QuadratureSettings], radii: Sequence[float], r: float) -> QuadratureSettings:
    """Cells shrink like √(r / radii[0]) so the cell error falls along the trace."""
    base = settings or QuadratureSettings()
    return base.refined(min(math.sqrt(radii[0] / r), TRACE_REFINEMENT_CAP))


def _exclusions(cfg: ChargeConfig, r: float) -> List[Tuple[np.ndarray, float]]:
    return [(z, r) for z in cfg.point_array()]


def modulus_limit_estimate(
    g: GreenEvaluator,
    cfg: ChargeConfig,
    radii: Sequence[float],
    settings: Optional[QuadratureSettings] = None,
    order: float = 1.0,
) -> AsymptoticTrace:
    """Trace of I(u, D_r) - λ r^{2-n} Σδ² over the radii with an extrapolated limit."""
    _check_radii(radii)
    validate_charge_config(cfg, g.domain, gamma_empty=g.gamma_empty)
    u = potential_function(g, cfg)
    c = g.constants
    charge = math.fsum(d * d for d in cfg.weights)
    values = []
    for r in radii:
        integral = dirichlet_integral(u, g.domain, _exclusions(cfg, r), _trace_settings(settings, radii, r))
        values.append(integral - c.lam * r ** (2 - c.n) * charge)
        logger.info(f"r={r}: I(u, D_r)={integral:.10g}, renormalized {values[-1]:.10g}")
    limit = richardson_limit(radii, values, order)
    return AsymptoticTrace(
        radii=list(radii),
        values=values,
        limit=limit,
        error_estimate=abs(limit - values[-1]),
    )


def _sphere_directions(n: int, count: int = 200) -> np.ndarray:
    if n == 3:
        k = np.arange(count) + 0.5
        polar = np.arccos(1.0 - 2.0 * k / count)
        azimuth = math.pi * (1.0 + 5.0 ** 0.5) * k
        return np.stack(
            [np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], axis=1
        )
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T / math.sqrt(n)
    return np.concatenate([axes, corners])


def extract_expansion_constants(
    v: Callable[[np.ndarray], np.ndarray],
    cfg: ChargeConfig,
    c: Constants,
    radius: float,
) -> List[float]:
    """b_k as the spherical average of v - δ_k λ|x - z_k|^{2-n} over S(z_k, radius)."""
    if radius <= 0:
        raise InvalidInputError("averaging radius must be positive")
    directions = _sphere_directions(cfg.n)
    pole = c.lam * radius ** (2 - c.n)
    constants = []
    for delta, z in zip(cfg.weights, cfg.point_array()):
        samples = np.asarray(v(z + radius * directions), dtype=float)
        constants.append(float(np.mean(samples)) - delta * pole)
    return constants


def energy_difference_check(
    v: ClosedFormFunction,
    u: ClosedFormFunction,
    domain: QuadDomain,
    cfg: ChargeConfig,
    b: Sequence[float],
    a: Sequence[float],
    radii: Sequence[float],
    settings: Optional[QuadratureSettings] = None,
) -> AsymptoticTrace:
    """Trace of I(v-u, D_r) - [I(v, D_r) - I(u, D_r) - 2 Σ δ_k (b_k - a_k)]; tends to 0."""
    _check_radii(radii)
    if len(b) != cfg.m or len(a) != cfg.m:
        raise InvalidInputError(f"need {cfg.m} expansion constants for v and for u")
    correction = 2.0 * math.fsum(d * (bk - ak) for d, bk, ak in zip(cfg.weights, b, a))
    difference = v - u
    values = []
    for r in radii:
        excluded = _exclusions(cfg, r)
        level = _trace_settings(settings, radii, r)
        lhs = dirichlet_integral(difference, domain, excluded, level)
        rhs = dirichlet_integral(v, domain, excluded, level) - dirichlet_integral(u, domain, excluded, level)
        values.append(lhs - (rhs - correction))
        logger.info(f"r={r}: energy identity defect {values[-1]:.3e}")
    return AsymptoticTrace(
        radii=list(radii),
        values=values,
        limit=richardson_limit(radii, values),
        error_estimate=abs(values[-1]),
    )


def patch_function(parts: Sequence[Tuple[Union[BallSpec, QuadDomain], ClosedFormFunction]]) -> ClosedFormFunction:
    """Composition competitor: u_i inside D_i, 0 on the rest of the space."""

    def _masks(x):
        return [contains_points(domain, x) for domain, _ in parts]

    def value(x):
        x = np.atleast_2d(x)
        total = np.zeros(len(x))
        for mask, (_, f) in zip(_masks(x), parts):
            if mask.any():
                total[mask] = f.value(x[mask])
        return total

    def gradient(x):
        x = np.atleast_2d(x)
        total = np.zeros_like(x)
        for mask, (_, f) in zip(_masks(x), parts):
            if mask.any():
                total[mask] = f.gradient(x[mask])
        return total

    singular = tuple(p for _, f in parts for p in f.singular_points)
    interfaces = tuple(d.ball() if hasattr(d, "ball") else d for d, _ in parts if isinstance(d, BallSpec))
    return ClosedFormFunction(value=value, gradient=gradient, singular_points=singular, interfaces=interfaces)
