"""
Verification harness for the subdomain inequalities.
Each check returns a VerificationReport with a signed slack (>= 0 when the
inequality holds) and an explicit error bar.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from robinkit.artifacts import decode_voxel_document
from robinkit.config import get_settings
from robinkit.errors import (
    GeometryError,
    InvalidInputError,
    PointOutsideDomainError,
    RobinKitError,
    StructuralConditionError,
)
from robinkit.evaluators import GreenEvaluator, make_evaluator
from robinkit.geometry import (
    DIRECTIONS,
    VoxelDomain,
    ball_inside,
    ball_touches_boundary,
    balls_overlap,
    lattice_for,
    make_constants,
    same_ball,
    shift_mask,
    validate_charge_config,
    voxelize,
)
from robinkit.kernels import (
    FOUR_PI,
    ball_harmonic_radius,
    kufarev_display_rhs_3d,
    neumann_modulus_two_points_3d,
)
from robinkit.models import (
    AsymptoticTrace,
    BallDomain,
    BallSpec,
    ChargeConfig,
    CompositionMode,
    DecompositionSpec,
    ExtensionDirection,
    GammaKind,
    ModulusResult,
    PointLike,
    VerificationReport,
    VoxelDocument,
    as_vector,
)
from robinkit.moduli import potential_function, reduced_modulus
from robinkit.quadrature import QuadratureSettings, dirichlet_integral

logger = logging.getLogger(__name__)

CLOSED_FORM_ERROR_BAR = 1e-9

# exclusion radius for the pole-free integrals I(u - u_i, D_i)
CORRECTION_EXCLUSION = 1e-6

DEFAULT_RHOS = (10.0, 100.0, 1000.0)


def _is_closed_form(doc) -> bool:
    if not (isinstance(doc, BallDomain) and doc.closed_form):
        return False
    if doc.gamma == GammaKind.FULL:
        return True
    return doc.n == 3 and doc.radius == 1.0 and not np.any(doc.center_vector())


def _grid_domain(doc, h: float, lattice) -> VoxelDomain:
    if isinstance(doc, VoxelDocument):
        domain = decode_voxel_document(doc)
        if domain.h != h or not np.allclose(domain.origin, lattice[0]) or domain.shape != tuple(lattice[1]):
            raise GeometryError("voxel documents must share the grid frame of the parent domain")
        return domain
    return voxelize(doc, h, lattice=lattice)


def _shared_lattice(parent, h: float):
    if isinstance(parent, VoxelDocument):
        domain = decode_voxel_document(parent)
        return domain.origin, domain.shape, domain.h
    origin, shape = lattice_for(parent.ball(), h)
    return origin, shape, h


def _resolve_index_map(spec: DecompositionSpec) -> List[List[int]]:
    parent_points = spec.parent.charges.point_array()
    if spec.index_map is not None:
        index_map = spec.index_map
        if len(index_map) != len(spec.parts) or any(
            len(row) != part.charges.m for row, part in zip(index_map, spec.parts)
        ):
            raise StructuralConditionError("index map does not match the parts' point counts", condition="3")
    else:
        index_map = []
        for part in spec.parts:
            row = []
            for z in part.charges.point_array():
                hits = np.nonzero(np.all(parent_points == z, axis=1))[0]
                if len(hits) != 1:
                    raise StructuralConditionError(f"point {z.tolist()} matches no parent point", condition="3")
                row.append(int(hits[0]))
            index_map.append(row)

    flat = [k for row in index_map for k in row]
    if sorted(flat) != list(range(spec.parent.charges.m)):
        raise StructuralConditionError("part points do not map one-to-one onto the parent points", condition="3")
    for i, (row, part) in enumerate(zip(index_map, spec.parts)):
        for j, k in enumerate(row):
            if not np.array_equal(part.charges.point_array()[j], parent_points[k]):
                raise StructuralConditionError(f"point {j} of part {i} differs from parent point {k}", condition="3")
            if part.charges.weights[j] != spec.parent.charges.weights[k]:
                raise StructuralConditionError(f"weight {j} of part {i} differs from parent weight {k}", condition="4")
    return index_map


def _check_ball_structure(parent: BallDomain, parts: Sequence[BallDomain], mode: CompositionMode):
    for i, part in enumerate(parts):
        if not ball_inside(part, parent):
            raise GeometryError(f"part {i} is not contained in the parent domain")
        for j in range(i):
            if balls_overlap(part, parts[j]):
                raise GeometryError(f"parts {j} and {i} overlap")
    for i, part in enumerate(parts):
        identical = same_ball(part, parent)
        if mode == CompositionMode.SUBDOMAINS:
            if part.gamma != GammaKind.FULL and not identical:
                raise StructuralConditionError(f"part {i} has free boundary inside the parent", condition="1")
            if (
                parent.gamma == GammaKind.FULL
                and part.gamma != GammaKind.FULL
                and ball_touches_boundary(part, parent)
            ):
                raise StructuralConditionError(f"parent Γ meets the free boundary of part {i}", condition="2")
        else:
            if part.gamma == GammaKind.FULL and not (identical and parent.gamma == GammaKind.FULL):
                raise StructuralConditionError(f"Γ of part {i} is not contained in the parent Γ", condition="Γ_i ⊂ Γ")


def _check_voxel_structure(parent: VoxelDomain, parts: Sequence[VoxelDomain], mode: CompositionMode):
    claimed = np.zeros(parent.shape, dtype=bool)
    for i, part in enumerate(parts):
        if np.any(part.occupancy & ~parent.occupancy):
            raise GeometryError(f"part {i} is not contained in the parent domain")
        if np.any(part.occupancy & claimed):
            raise GeometryError(f"part {i} overlaps an earlier part")
        claimed |= part.occupancy

    for i, part in enumerate(parts):
        for d, (axis, sign) in enumerate(DIRECTIONS):
            if mode == CompositionMode.SUBDOMAINS:
                into_parent = part.facets[d] & shift_mask(parent.occupancy, axis, sign)
                if np.any(into_parent & ~part.dirichlet[d]):
                    raise StructuralConditionError(f"part {i} has free facets inside the parent", condition="1")
                parent_gamma_here = parent.dirichlet[d] & part.occupancy
                if np.any(parent_gamma_here & ~part.dirichlet[d]):
                    raise StructuralConditionError(f"parent Γ facets of part {i} are not in Γ_{i}", condition="2")
            elif np.any(part.dirichlet[d] & ~parent.dirichlet[d]):
                raise StructuralConditionError(f"Γ of part {i} is not contained in the parent Γ", condition="Γ_i ⊂ Γ")


def _correction(parent_g: GreenEvaluator, parent_cfg: ChargeConfig, part_g: GreenEvaluator, part_cfg: ChargeConfig, domain) -> float:
    """I(u - u_i, D_i); the poles cancel inside D_i."""
    u = potential_function(parent_g, parent_cfg)
    u_i = potential_function(part_g, part_cfg)
    spacing = domain.h if isinstance(domain, VoxelDomain) else domain.radius / 16.0
    settings = QuadratureSettings(h=spacing, refine_ratio=None, interface_levels=2, max_depth=2)
    excluded = [(z, CORRECTION_EXCLUSION) for z in part_cfg.point_array()]
    return dirichlet_integral(u - u_i, domain, excluded, settings)


def verify_composition(spec: DecompositionSpec, mode: Optional[CompositionMode] = None) -> VerificationReport:
    """
    SUBDOMAINS: M ≥ Σ M_i (+ Σ I(u - u_i, D_i)); GAMMA_SUBSET: Σ M_i ≥ M (+ the same corrections).
    """
    mode = mode or spec.mode
    settings = get_settings()
    _resolve_index_map(spec)

    docs = [spec.parent.domain] + [p.domain for p in spec.parts]
    closed = all(_is_closed_form(doc) for doc in docs)
    if closed:
        parent = spec.parent.domain
        _check_ball_structure(parent, [p.domain for p in spec.parts], mode)
        domains = docs
    else:
        h = spec.h or next((d.h for d in docs if getattr(d, "h", None)), None) or settings.grid_h
        origin, shape, h = _shared_lattice(spec.parent.domain, h)
        domains = [_grid_domain(doc, h, (origin, shape)) for doc in docs]
        _check_voxel_structure(domains[0], domains[1:], mode)

    for i, part in enumerate(spec.parts):
        if (closed and part.domain.gamma == GammaKind.NONE) or (not closed and domains[i + 1].gamma_empty):
            validate_charge_config(part.charges, domains[i + 1], gamma_empty=True)

    try:
        configs = [spec.parent.charges] + [p.charges for p in spec.parts]
        evaluators = [make_evaluator(dom, cfg) for dom, cfg in zip(domains, configs)]
        results: List[ModulusResult] = [reduced_modulus(g, cfg) for g, cfg in zip(evaluators, configs)]
    except RobinKitError:
        raise
    except Exception as e:
        logger.error(f"Composition check failed: {str(e)}")
        raise InvalidInputError(f"composition check failed: {str(e)}")

    parent_m = results[0].M
    parts_m = math.fsum(r.M for r in results[1:])
    if mode == CompositionMode.SUBDOMAINS:
        lhs, rhs, slack = parent_m, parts_m, parent_m - parts_m
    else:
        lhs, rhs, slack = parts_m, parent_m, parts_m - parent_m
    error_bar = CLOSED_FORM_ERROR_BAR if closed else math.fsum(r.error_bar for r in results)

    with_corrections = None
    if spec.corrections:
        total = math.fsum(
            _correction(evaluators[0], configs[0], evaluators[i], configs[i], domains[i])
            for i in range(1, len(domains))
        )
        with_corrections = slack - total

    report = VerificationReport.from_sides(
        f"composition:{mode.value}",
        lhs,
        rhs,
        slack,
        error_bar,
        slack_with_corrections=with_corrections,
        inputs={"parts": len(spec.parts), "backend": "closed_form" if closed else "grid"},
    )
    logger.info(f"Composition ({mode.value}): slack {slack:.6g} ± {error_bar:.1e}, holds={report.holds}")
    return report


def _check_disjoint_balls(balls: Sequence[BallSpec], points: Sequence[PointLike]):
    if len(balls) != len(points):
        raise InvalidInputError("one point per ball required")
    for i, ball in enumerate(balls):
        for j in range(i):
            if balls_overlap(ball, balls[j]):
                raise GeometryError(f"balls {j} and {i} overlap")
        z = as_vector(points[i])
        if float(np.linalg.norm(z - ball.center_vector())) >= ball.radius:
            raise PointOutsideDomainError(f"point {i} is not inside its ball")


def verify_corollary_2_5(
    balls: Sequence[BallSpec],
    points: Sequence[PointLike],
    weights: Sequence[float],
) -> VerificationReport:
    """-Σ δ_l² r(D_l, x_l)^{2-n} ≤ Σ_l Σ_{p≠l} δ_l δ_p |x_l - x_p|^{2-n} for disjoint balls."""
    _check_disjoint_balls(balls, points)
    if len(weights) != len(balls):
        raise InvalidInputError("one weight per ball required")
    n = balls[0].n
    c = make_constants(n)
    xs = [as_vector(p) for p in points]
    lhs = -math.fsum(
        w * w * ball_harmonic_radius(x, ball, c) ** (2 - n) for w, x, ball in zip(weights, xs, balls)
    )
    rhs = math.fsum(
        weights[l] * weights[p] * float(np.linalg.norm(xs[l] - xs[p])) ** (2 - n)
        for l in range(len(xs))
        for p in range(len(xs))
        if p != l
    )
    return VerificationReport.from_sides(
        "disjoint_balls",
        lhs,
        rhs,
        rhs - lhs,
        CLOSED_FORM_ERROR_BAR,
        inputs={"m": len(balls), "n": n},
    )


def corollary_2_5_limit_trace(
    balls: Sequence[BallSpec],
    points: Sequence[PointLike],
    weights: Sequence[float],
    rhos: Sequence[float] = DEFAULT_RHOS,
) -> AsymptoticTrace:
    """
    Subdomain inequality in B(0, ρ) with Γ = ∂B for growing ρ. Trace values are
    (M(ρ) - Σ M_l)/λ over radii 1/ρ; the limit is the direct slack.
    """
    direct = verify_corollary_2_5(balls, points, weights)
    n = balls[0].n
    c = make_constants(n)
    cfg = ChargeConfig(points=[as_vector(p) for p in points], weights=list(weights))
    parts_m = math.fsum(
        -c.lam * w * w * ball_harmonic_radius(p, b, c) ** (2 - n) for w, p, b in zip(weights, cfg.point_array(), balls)
    )
    values = []
    for rho in sorted(rhos):
        big = BallSpec(center=[0.0] * n, radius=rho)
        for i, ball in enumerate(balls):
            if not ball_inside(ball, big):
                raise GeometryError(f"ball {i} does not fit in B(0, {rho})")
        parent = reduced_modulus(make_evaluator(big, cfg), cfg)
        values.append((parent.M - parts_m) / c.lam)

    distances = [abs(v - direct.slack) for v in values]
    if any(b > a + 1e-12 for a, b in zip(distances, distances[1:])):
        logger.warning(f"Limit trace does not stabilize monotonically: {distances}")
    return AsymptoticTrace(
        radii=[1.0 / rho for rho in sorted(rhos)],
        values=values,
        limit=direct.slack,
        error_estimate=distances[-1],
    )


def _extension_structure(inner, outer, direction: ExtensionDirection):
    if isinstance(inner, VoxelDomain):
        if np.any(inner.occupancy & ~outer.occupancy):
            raise GeometryError("the inner domain is not contained in the outer domain")

        for d, (axis, sign) in enumerate(DIRECTIONS):
            crossing = inner.facets[d] & shift_mask(outer.occupancy, axis, sign)
            if direction == ExtensionDirection.ACROSS_GAMMA:
                if np.any(crossing & ~inner.dirichlet[d]):
                    raise StructuralConditionError("extension crosses free boundary", condition="extension")
                if np.any(outer.dirichlet[d] & inner.occupancy & ~inner.dirichlet[d]):
                    raise StructuralConditionError("outer Γ meets the closure of D off Γ", condition="Γ̃")
            else:
                if np.any(crossing & inner.dirichlet[d]):
                    raise StructuralConditionError("extension crosses Γ", condition="extension")
                if not np.array_equal(outer.dirichlet[d], inner.dirichlet[d]):
                    raise StructuralConditionError("outer Γ must equal Γ", condition="Γ̃")
        return

    if not ball_inside(inner, outer):
        raise GeometryError("the inner domain is not contained in the outer domain")
    extended = not same_ball(inner, outer)
    if direction == ExtensionDirection.ACROSS_GAMMA:
        if extended and inner.gamma != GammaKind.FULL:
            raise StructuralConditionError("extension crosses free boundary", condition="extension")
    else:
        if extended and inner.gamma != GammaKind.NONE:
            raise StructuralConditionError("extension crosses Γ", condition="extension")
        if outer.gamma != inner.gamma:
            raise StructuralConditionError("outer Γ must equal Γ", condition="Γ̃")


def verify_extension_monotonicity(
    inner,
    outer,
    cfg: ChargeConfig,
    direction: ExtensionDirection,
    h: Optional[float] = None,
) -> VerificationReport:
    """Quadratic form grows across Γ and shrinks across the free boundary."""
    settings = get_settings()
    closed = _is_closed_form(inner) and _is_closed_form(outer)
    if closed:
        domains = [inner, outer]
    else:
        spacing = h or getattr(outer, "h", None) or getattr(inner, "h", None) or settings.grid_h
        origin, shape, spacing = _shared_lattice(outer, spacing)
        domains = [_grid_domain(doc, spacing, (origin, shape)) for doc in (inner, outer)]
    _extension_structure(domains[0], domains[1], direction)

    inner_m, outer_m = (reduced_modulus(make_evaluator(dom, cfg), cfg) for dom in domains)
    if direction == ExtensionDirection.ACROSS_GAMMA:
        lhs, rhs = outer_m.M, inner_m.M
    else:
        lhs, rhs = inner_m.M, outer_m.M
    error_bar = CLOSED_FORM_ERROR_BAR if closed else inner_m.error_bar + outer_m.error_bar
    return VerificationReport.from_sides(
        f"extension:{direction.value}",
        lhs,
        rhs,
        lhs - rhs,
        error_bar,
        inputs={"m": cfg.m, "backend": "closed_form" if closed else "grid"},
    )


def verify_kufarev_3d(d1: BallSpec, d2: BallSpec, a1: PointLike, a2: PointLike) -> VerificationReport:
    """-λ₃(1/r₁ + 1/r₂) ≤ M(U, ∅, {a₁, a₂}, {1, -1}) for disjoint balls in the unit ball."""
    unit = BallSpec(center=[0.0, 0.0, 0.0], radius=1.0)
    if d1.n != 3 or d2.n != 3:
        raise InvalidInputError("the two-point Neumann check is for n = 3")
    for i, ball in enumerate((d1, d2)):
        if not ball_inside(ball, unit):
            raise GeometryError(f"ball {i + 1} does not lie in the unit ball")
    _check_disjoint_balls([d1, d2], [a1, a2])
    c = make_constants(3)
    r1 = ball_harmonic_radius(a1, d1, c)
    r2 = ball_harmonic_radius(a2, d2, c)
    lhs = -c.lam * (1.0 / r1 + 1.0 / r2)
    rhs = neumann_modulus_two_points_3d(a1, a2)
    display = kufarev_display_rhs_3d(a1, a2)
    cross_check = abs(FOUR_PI * rhs - display)
    return VerificationReport.from_sides(
        "two_point_neumann",
        lhs,
        rhs,
        rhs - lhs,
        CLOSED_FORM_ERROR_BAR,
        cross_check=cross_check,
        inputs={"r1": r1, "r2": r2, "display_rhs": display},
    )


def random_disjoint_balls(
    rng: np.random.Generator,
    count: int,
    n: int = 3,
    extent: float = 1.0,
    min_radius: float = 0.05,
    max_radius: float = 0.3,
    max_attempts: int = 10_000,
) -> Tuple[List[BallSpec], List[np.ndarray]]:
    """Rejection-sampled disjoint balls in [-extent, extent]^n with one interior point each."""
    balls: List[BallSpec] = []
    points: List[np.ndarray] = []
    for _ in range(max_attempts):
        if len(balls) == count:
            break
        radius = float(rng.uniform(min_radius, max_radius))
        center = rng.uniform(-extent, extent, size=n)
        candidate = BallSpec(center=center, radius=radius)
        if any(balls_overlap(candidate, b) for b in balls):
            continue
        direction = rng.normal(size=n)
        offset = rng.uniform(0.0, 0.9) * radius * direction / np.linalg.norm(direction)
        balls.append(candidate)
        points.append(center + offset)
    if len(balls) < count:
        raise GeometryError(f"could not place {count} disjoint balls in {max_attempts} attempts")
    return balls, points


def verify_batch(configs: Sequence[Tuple[Sequence[BallSpec], Sequence[PointLike], Sequence[float]]]) -> List[VerificationReport]:
    """Disjoint-ball checks over a list of configurations, in order."""
    return [verify_corollary_2_5(balls, points, weights) for balls, points, weights in configs]
