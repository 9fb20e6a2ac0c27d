"""
Dirichlet integrals I(f, D_r) = ∫_{D_r} |∇f|² with D_r = D minus small balls.

Closed-form functions use an adaptive midpoint rule: cells are halved until
their size is at most (distance to the nearest charge)/refine_ratio, cells
straddling a sphere or plane of the geometry are refined a few extra levels,
and a cell belongs to D_r when its center does.

In three dimensions the annulus r < |x - z| < R around each excluded ball is
integrated in polar coordinates instead (Gauss-Legendre in log|x - z| and in
the polar angle, uniform in the azimuth). R is half the clearance to the
nearest boundary, interface or other charge. A smoothstep weight hands the
outer half of the annulus over to the cells, so no cell has to resolve the
excluded sphere itself.

Grid fields integrate over their own cells with finite-difference gradients.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import roots_legendre

from robinkit.errors import GeometryError, InvalidInputError
from robinkit.geometry import VoxelDomain, boundary_distance, shift_mask
from robinkit.models import BallDomain, BallSpec, PointLike, as_vector
from robinkit.solver import ScalarField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower, upper]."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.lower)

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        return np.all((points > np.asarray(self.lower)) & (points < np.asarray(self.upper)), axis=1)

    def boundary_distance(self, point: PointLike) -> float:
        p = as_vector(point)
        return float(min(np.min(p - np.asarray(self.lower)), np.min(np.asarray(self.upper) - p)))


@dataclass(frozen=True)
class QuadratureSettings:
    h: float = 1.0 / 16.0
    refine_ratio: Optional[float] = 16.0
    interface_levels: int = 2
    max_depth: int = 10
    # Gauss nodes per radial piece and in the polar angle; 0 turns polar shells off
    shell_nodes: int = 24

    def refined(self, factor: float) -> "QuadratureSettings":
        """Every cell shrinks by `factor`; the polar shells are unchanged."""
        if factor <= 0:
            raise InvalidInputError(f"refinement factor must be positive, got {factor}")
        ratio = None if self.refine_ratio is None else self.refine_ratio * factor
        return replace(self, h=self.h / factor, refine_ratio=ratio)


@dataclass(frozen=True, eq=False)
class PolarShell:
    """Annulus radius < |x - center| < outer; full weight up to `inner`, smoothstep to 0 at `outer`."""

    center: np.ndarray
    radius: float
    inner: float
    outer: float

    def weight(self, rho: np.ndarray) -> np.ndarray:
        t = np.clip((rho - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True, eq=False)
class ClosedFormFunction:
    """A function with an analytic gradient, its singular points and kink spheres."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    singular_points: Tuple[Tuple[float, ...], ...] = ()
    interfaces: Tuple[BallSpec, ...] = ()

    def __call__(self, x):
        return self.value(x)

    def combine(self, other: "ClosedFormFunction", a: float = 1.0, b: float = 1.0) -> "ClosedFormFunction":
        """a·self + b·other."""
        return ClosedFormFunction(
            value=lambda x: a * self.value(x) + b * other.value(x),
            gradient=lambda x: a * self.gradient(x) + b * other.gradient(x),
            singular_points=tuple(dict.fromkeys(self.singular_points + other.singular_points)),
            interfaces=tuple(dict.fromkeys(self.interfaces + other.interfaces)),
        )

    def __sub__(self, other: "ClosedFormFunction") -> "ClosedFormFunction":
        return self.combine(other, 1.0, -1.0)

    def __add__(self, other: "ClosedFormFunction") -> "ClosedFormFunction":
        return self.combine(other, 1.0, 1.0)


QuadDomain = Union[BallSpec, BallDomain, Box, VoxelDomain]
Exclusion = Tuple[np.ndarray, float]


def normalize_exclusions(excluded: Sequence) -> List[Exclusion]:
    result = []
    for item in excluded or ():
        if isinstance(item, BallSpec):
            result.append((item.center_vector(), float(item.radius)))
        else:
            point, radius = item
            result.append((as_vector(point), float(radius)))
    return result


def _domain_distance(domain: QuadDomain, point: np.ndarray) -> float:
    if isinstance(domain, Box):
        return domain.boundary_distance(point)
    return boundary_distance(domain, point)


def check_exclusions(domain: QuadDomain, exclusions: List[Exclusion]):
    """Excluded balls must lie inside the domain, clear of its boundary, and be pairwise disjoint."""
    for i, (z, r) in enumerate(exclusions):
        if r <= 0:
            raise GeometryError(f"exclusion radius {r} must be positive")
        if _domain_distance(domain, z) <= r:
            raise GeometryError(f"excluded ball {i} around {z.tolist()} with r={r} touches the boundary")
        for j in range(i):
            zj, rj = exclusions[j]
            if float(np.linalg.norm(z - zj)) < r + rj:
                raise GeometryError(f"excluded balls {j} and {i} overlap")


def _clip_geometry(domain) -> Optional[Tuple[np.ndarray, float]]:
    clip = getattr(domain, "clip", None)
    if clip is None:
        return None
    normal = clip.normal.array()
    return normal / np.linalg.norm(normal), clip.offset


def _initial_cells(domain: QuadDomain, h: float) -> Tuple[np.ndarray, float]:
    if isinstance(domain, VoxelDomain):
        return domain.cell_centers(), domain.h
    if isinstance(domain, Box):
        lower, upper = np.asarray(domain.lower), np.asarray(domain.upper)
    else:
        lower = domain.center_vector() - domain.radius
        upper = domain.center_vector() + domain.radius
    counts = np.maximum(1, np.ceil((upper - lower) / h).astype(int))
    axes = [lower[a] + (np.arange(counts[a]) + 0.5) * h for a in range(len(lower))]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lower))
    return grid, h


def _inside_domain(domain: QuadDomain, centers: np.ndarray) -> np.ndarray:
    if isinstance(domain, VoxelDomain):
        return np.ones(len(centers), dtype=bool)
    if isinstance(domain, Box):
        return domain.contains_points(centers)
    rel = centers - domain.center_vector()
    inside = np.einsum("ij,ij->i", rel, rel) < domain.radius ** 2
    clip = _clip_geometry(domain)
    if clip is not None:
        inside &= rel @ clip[0] < clip[1]
    return inside


def _outside_domain(domain: QuadDomain, centers: np.ndarray, half_diag: float) -> np.ndarray:
    """Cells certainly disjoint from the domain."""
    if isinstance(domain, (VoxelDomain, Box)):
        return np.zeros(len(centers), dtype=bool)
    rel = centers - domain.center_vector()
    out = np.linalg.norm(rel, axis=1) - half_diag >= domain.radius
    clip = _clip_geometry(domain)
    if clip is not None:
        out |= rel @ clip[0] - half_diag >= clip[1]
    return out


def _straddles(domain: QuadDomain, spheres: List[Tuple[np.ndarray, float]], centers: np.ndarray, half_diag: float) -> np.ndarray:
    hit = np.zeros(len(centers), dtype=bool)
    for center, radius in spheres:
        hit |= np.abs(np.linalg.norm(centers - center, axis=1) - radius) < half_diag
    clip = _clip_geometry(domain)
    if clip is not None:
        hit |= np.abs((centers - domain.center_vector()) @ clip[0] - clip[1]) < half_diag
    return hit


def adaptive_cells(
    domain: QuadDomain,
    exclusions: List[Exclusion],
    near_points: Sequence[np.ndarray],
    interfaces: Sequence[BallSpec],
    settings: QuadratureSettings,
    blended: Sequence[Exclusion] = (),
):
    """
    Yield (centers, size) blocks of accepted cells of D_r, coarsest level first.

    `blended` holes are cut like exclusions but their rims are not refined:
    the caller weights the integrand to zero there.
    """
    centers, size = _initial_cells(domain, settings.h)
    n = centers.shape[1]
    spheres = [(z, r) for z, r in exclusions] + [(b.center_vector(), b.radius) for b in interfaces]
    if isinstance(domain, BallSpec):
        spheres.append((domain.center_vector(), domain.radius))
    holes = list(exclusions) + list(blended)
    radius_of = {tuple(z): r for z, r in holes}
    refine_points = [np.asarray(p, dtype=float) for p in near_points] + [z for z, _ in holes]
    floor = np.array([radius_of.get(tuple(p), 0.0) for p in refine_points])
    interface_size = size / 2 ** settings.interface_levels
    offsets = np.array(list(itertools.product((-0.25, 0.25), repeat=n)))

    for depth in range(settings.max_depth + 1):
        if len(centers) == 0:
            return
        half_diag = 0.5 * size * np.sqrt(n)
        drop = _outside_domain(domain, centers, half_diag)
        for z, r in holes:
            drop |= np.linalg.norm(centers - z, axis=1) + half_diag < r
        centers = centers[~drop]

        refine = np.zeros(len(centers), dtype=bool)
        if depth < settings.max_depth:
            if settings.refine_ratio and refine_points:
                dist = np.stack([np.linalg.norm(centers - p, axis=1) for p in refine_points], axis=1)
                near = np.min(np.maximum(dist, floor), axis=1)
                refine |= size * settings.refine_ratio > near
            if size > interface_size:
                refine |= _straddles(domain, spheres, centers, half_diag)

        accepted = centers[~refine]
        keep = _inside_domain(domain, accepted)
        for z, r in holes:
            keep &= np.linalg.norm(accepted - z, axis=1) > r
        yield accepted[keep], size

        parents = centers[refine]
        centers = (parents[:, None, :] + size * offsets[None, :, :]).reshape(-1, n)
        size *= 0.5


def cell_gradients(field: ScalarField) -> np.ndarray:
    """Central differences inside, one-sided next to the boundary; (N, 3) in cell order."""
    domain = field.domain
    box = field.as_array(fill=np.nan)
    occ = domain.occupancy
    grads = []
    for axis in range(3):
        fwd = shift_mask(box, axis, 1, fill=np.nan)
        bwd = shift_mask(box, axis, -1, fill=np.nan)
        has_f, has_b = np.isfinite(fwd), np.isfinite(bwd)
        g = np.zeros_like(box)
        both = has_f & has_b
        g[both] = (fwd[both] - bwd[both]) / (2.0 * domain.h)
        only_f = has_f & ~has_b
        g[only_f] = (fwd[only_f] - box[only_f]) / domain.h
        only_b = has_b & ~has_f
        g[only_b] = (box[only_b] - bwd[only_b]) / domain.h
        grads.append(g[occ])
    return np.stack(grads, axis=1)


def _grid_integral(f: ScalarField, exclusions: List[Exclusion]) -> float:
    domain = f.domain
    for z, r in exclusions:
        if r <= 2.0 * domain.h:
            raise GeometryError(f"exclusion radius {r} must exceed 2h = {2.0 * domain.h} on a grid")
    grads = cell_gradients(f)
    centers = domain.cell_centers()
    keep = np.ones(len(centers), dtype=bool)
    for z, r in exclusions:
        keep &= np.linalg.norm(centers - z, axis=1) > r
    return float(np.sum(grads[keep] ** 2)) * domain.h ** 3


def dirichlet_integral(
    f: Union[ScalarField, ClosedFormFunction],
    domain: QuadDomain,
    excluded: Sequence = (),
    settings: Optional[QuadratureSettings] = None,
) -> float:
    """Midpoint-rule I(f, D_r) for a grid field or a closed-form function."""
    exclusions = normalize_exclusions(excluded)
    if isinstance(f, ScalarField):
        check_exclusions(f.domain, exclusions)
        return _grid_integral(f, exclusions)
    if not isinstance(f, ClosedFormFunction):
        raise InvalidInputError(f"cannot integrate {type(f).__name__}")
    check_exclusions(domain, exclusions)
    settings = settings or QuadratureSettings()

    shells = polar_shells(domain, exclusions, f, settings)
    sharp = [ex for ex, shell in zip(exclusions, shells) if shell is None]
    shells = [shell for shell in shells if shell is not None]
    blended = [(shell.center, shell.inner) for shell in shells]

    total = math.fsum(_shell_integral(f, shell, settings.shell_nodes) for shell in shells)
    cells = 0
    for centers, size in adaptive_cells(domain, sharp, f.singular_points, f.interfaces, settings, blended):
        if len(centers) == 0:
            continue
        grad = np.atleast_2d(f.gradient(centers))
        density = np.einsum("ij,ij->i", grad, grad)
        for shell in shells:
            density = density * (1.0 - shell.weight(np.linalg.norm(centers - shell.center, axis=1)))
        total += float(np.sum(density)) * size ** centers.shape[1]
        cells += len(centers)
    logger.debug(f"Dirichlet integral over {cells} cells and {len(shells)} polar shells: {total:.10g}")
    return total


def polar_shells(
    domain: QuadDomain,
    exclusions: List[Exclusion],
    f: ClosedFormFunction,
    settings: QuadratureSettings,
) -> List[Optional[PolarShell]]:
    """One shell per exclusion, or None where the clearance is too small or n != 3."""
    if settings.shell_nodes <= 0:
        return [None] * len(exclusions)
    shells: List[Optional[PolarShell]] = []
    for i, (z, r) in enumerate(exclusions):
        if len(z) != 3:
            shells.append(None)
            continue
        clearance = [_domain_distance(domain, z)]
        clearance += [float(np.linalg.norm(z - zj)) - rj for j, (zj, rj) in enumerate(exclusions) if j != i]
        for p in f.singular_points:
            d = float(np.linalg.norm(z - np.asarray(p, dtype=float)))
            if d > 0:
                clearance.append(d)
        for b in f.interfaces:
            clearance.append(abs(float(np.linalg.norm(z - b.center_vector())) - b.radius))
        outer = 0.5 * min(clearance)
        inner = max(r, 0.5 * outer)
        shells.append(PolarShell(center=z, radius=r, inner=inner, outer=outer) if outer > inner else None)
    return shells


def _sphere_rule(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit directions and solid-angle weights: Gauss-Legendre in cos θ, uniform in φ."""
    mu, w_mu = roots_legendre(nodes)
    phi = (np.arange(2 * nodes) + 0.5) * math.pi / nodes
    sin = np.sqrt(1.0 - mu * mu)
    directions = np.stack(
        [np.outer(sin, np.cos(phi)), np.outer(sin, np.sin(phi)), np.repeat(mu[:, None], 2 * nodes, axis=1)],
        axis=-1,
    ).reshape(-1, 3)
    return directions, np.repeat(w_mu, 2 * nodes) * (math.pi / nodes)


def _shell_integral(f: ClosedFormFunction, shell: PolarShell, nodes: int) -> float:
    """∫ weight·|∇f|² over the shell; the radial pieces split at `inner` where the weight has a kink."""
    directions, solid = _sphere_rule(nodes)
    t, w_t = roots_legendre(nodes)
    total = 0.0
    for a, b in ((shell.radius, shell.inner), (shell.inner, shell.outer)):
        if b <= a:
            continue
        half = 0.5 * math.log(b / a)
        rho = np.exp(half * t + 0.5 * math.log(a * b))
        # dx = ρ² dρ dω and dρ = ρ d(log ρ)
        radial = half * w_t * rho ** 3 * shell.weight(rho)
        points = shell.center + (rho[:, None, None] * directions[None, :, :]).reshape(-1, 3)
        grad = np.atleast_2d(f.gradient(points)).reshape(len(rho), len(directions), 3)
        total += float(radial @ (np.einsum("ijk,ijk->ij", grad, grad) @ solid))
    return total
