"""
Domain model for robinkit.
Dimensional constants, charge-configuration validation and voxel domains
with a labelled boundary partition (Γ facets are DIRICHLET, the rest NEUMANN).
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from robinkit.errors import (
    ChargeBalanceError,
    DimensionUnsupportedError,
    DuplicatePointError,
    GeometryError,
    InvalidInputError,
    PointOutsideDomainError,
)
from robinkit.models import (
    BallDomain,
    BallSpec,
    BoundaryLabel,
    CapSelection,
    ChargeConfig,
    Constants,
    GammaKind,
    GammaRule,
    HalfSpaceClip,
    PointLike,
    as_vector,
)

logger = logging.getLogger(__name__)

# Facet directions as (axis, sign); index into the first axis of label arrays.
DIRECTIONS: Tuple[Tuple[int, int], ...] = ((0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1))

# Relative tolerance for the zero-sum requirement on Γ = ∅ weights.
BALANCE_RTOL = 1e-12

# facet centers on the cap plane count as part of the cap
CAP_TOL = 1e-12


def make_constants(n: int) -> Constants:
    """Unit-sphere area ω_{n-1} and λ_n = 1/((n-2) ω_{n-1})."""
    if n < 3:
        raise DimensionUnsupportedError(f"dimension n={n} is unsupported; n >= 3 is required")
    omega = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return Constants(n=n, omega=omega, lam=1.0 / ((n - 2) * omega))


def shift_mask(arr: np.ndarray, axis: int, sign: int, fill=False) -> np.ndarray:
    """out[i] = arr[i + sign * e_axis], `fill` where that index leaves the array."""
    out = np.full_like(arr, fill)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if sign > 0:
        dst[axis], src[axis] = slice(0, -1), slice(1, None)
    else:
        dst[axis], src[axis] = slice(1, None), slice(0, -1)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def boundary_facets(occupancy: np.ndarray) -> np.ndarray:
    """Facets between occupied and unoccupied cells, shape (6, *occupancy.shape)."""
    return np.stack([occupancy & ~shift_mask(occupancy, axis, sign) for axis, sign in DIRECTIONS])


@dataclass(frozen=True, eq=False)
class VoxelDomain:
    """
    A 3D voxel domain. Cell (i, j, k) has center origin + (index + 1/2) h.
    `dirichlet[d]` marks boundary facets in direction DIRECTIONS[d] that belong to Γ.
    """

    origin: np.ndarray
    h: float
    occupancy: np.ndarray
    dirichlet: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=float)
        occupancy = np.array(self.occupancy, dtype=bool)
        dirichlet = np.array(self.dirichlet, dtype=bool)
        if origin.shape != (3,) or occupancy.ndim != 3:
            raise GeometryError("voxel domains are three dimensional")
        if dirichlet.shape != (6,) + occupancy.shape:
            raise GeometryError(f"facet labels must have shape {(6,) + occupancy.shape}")
        if not self.h > 0:
            raise GeometryError("voxel spacing must be positive")
        if not occupancy.any():
            raise GeometryError("voxel mask is empty")
        _, components = ndimage.label(occupancy)
        if components != 1:
            raise GeometryError(f"voxel mask has {components} connected components, expected 1")
        if np.any(dirichlet & ~boundary_facets(occupancy)):
            raise GeometryError("facet labels found on interior facets")
        for arr in (origin, occupancy, dirichlet):
            arr.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "occupancy", occupancy)
        object.__setattr__(self, "dirichlet", dirichlet)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(self.occupancy.shape)

    @property
    def n(self) -> int:
        return 3

    @property
    def cell_count(self) -> int:
        return int(self.occupancy.sum())

    @cached_property
    def facets(self) -> np.ndarray:
        return boundary_facets(self.occupancy)

    @property
    def neumann(self) -> np.ndarray:
        return self.facets & ~self.dirichlet

    @property
    def gamma_empty(self) -> bool:
        return not bool(self.dirichlet.any())

    def facet_area_total(self) -> float:
        """Discrete μ₂(∂D): number of boundary facets times h²."""
        return float(self.facets.sum()) * self.h ** 2

    def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.origin[a] + (np.arange(self.shape[a]) + 0.5) * self.h for a in range(3))

    def center_grid(self) -> np.ndarray:
        """Cell centers for the whole box, shape (*shape, 3)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def cell_centers(self) -> np.ndarray:
        """Centers of the occupied cells in np.nonzero order, shape (N, 3)."""
        idx = np.array(np.nonzero(self.occupancy)).T
        return self.origin + (idx + 0.5) * self.h

    def cell_index(self, point: PointLike) -> Tuple[int, int, int]:
        return tuple(np.floor((as_vector(point) - self.origin) / self.h).astype(int))

    def contains(self, point: PointLike) -> bool:
        idx = self.cell_index(point)
        if any(i < 0 or i >= s for i, s in zip(idx, self.shape)):
            return False
        return bool(self.occupancy[idx])

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        idx = np.floor((np.asarray(points, dtype=float) - self.origin) / self.h).astype(int)
        inside = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=1)
        result = np.zeros(len(idx), dtype=bool)
        result[inside] = self.occupancy[tuple(idx[inside].T)]
        return result

    @cached_property
    def _cell_distance(self) -> np.ndarray:
        padded = np.pad(self.occupancy, 1, constant_values=False)
        return ndimage.distance_transform_edt(padded)[1:-1, 1:-1, 1:-1]

    def boundary_distance(self, point: PointLike) -> float:
        """Approximate distance from a point to ∂D (cell-center resolution)."""
        if not self.contains(point):
            return 0.0
        return max(0.0, (float(self._cell_distance[self.cell_index(point)]) - 0.5) * self.h)

    def lattice(self) -> Tuple[np.ndarray, Tuple[int, int, int]]:
        return self.origin, self.shape


DomainSpec = Union[BallSpec, BallDomain, VoxelDomain]


def lattice_for(ball: BallSpec, h: float) -> Tuple[np.ndarray, Tuple[int, int, int]]:
    """Grid frame that makes the ball center a cell center and covers the ball."""
    half = int(math.ceil(ball.radius / h)) + 1
    origin = ball.center_vector() - (half + 0.5) * h
    return origin, (2 * half + 1,) * 3


def _gamma_labels(gamma: GammaRule, offsets: np.ndarray) -> np.ndarray:
    if gamma == GammaKind.FULL:
        return np.ones(offsets.shape[:-1], dtype=bool)
    if gamma == GammaKind.NONE:
        return np.zeros(offsets.shape[:-1], dtype=bool)
    if isinstance(gamma, CapSelection):
        normal = gamma.cap_normal.array()
        normal = normal / np.linalg.norm(normal)
        return offsets @ normal >= gamma.cap_offset - CAP_TOL
    raise InvalidInputError(f"unknown boundary selection {gamma!r}")


def voxelize_ball(
    ball: BallSpec,
    h: float,
    gamma: GammaRule = GammaKind.FULL,
    clip: Optional[HalfSpaceClip] = None,
    lattice: Optional[Tuple[np.ndarray, Tuple[int, int, int]]] = None,
) -> VoxelDomain:
    """
    Occupy the cells whose centers lie in the ball (and below the clip plane)
    and label each boundary facet by the Γ selection rule. Facets on the flat
    face of a clipped ball take the clip's own label.
    """
    if ball.n != 3:
        raise DimensionUnsupportedError("voxel domains exist only for n = 3")
    if not (h > 0 and h < ball.radius / 4.0):
        raise GeometryError(f"spacing h={h} must satisfy 0 < h < radius/4 = {ball.radius / 4.0}")

    origin, shape = lattice if lattice is not None else lattice_for(ball, h)
    origin = np.asarray(origin, dtype=float)
    axes = [origin[a] + (np.arange(shape[a]) + 0.5) * h for a in range(3)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    center = ball.center_vector()
    rel = centers - center
    in_ball = np.einsum("...i,...i->...", rel, rel) < ball.radius ** 2
    occupancy = in_ball.copy()
    if clip is not None:
        clip_normal = clip.normal.array() / np.linalg.norm(clip.normal.array())
        occupancy &= rel @ clip_normal < clip.offset
    if not occupancy.any():
        raise GeometryError("voxelized ball is empty")

    facets = boundary_facets(occupancy)
    dirichlet = np.zeros_like(facets)
    for d, (axis, sign) in enumerate(DIRECTIONS):
        step = np.zeros(3)
        step[axis] = sign * h
        facet_offsets = rel + 0.5 * step
        spherical = ~shift_mask(in_ball, axis, sign)
        labels = _gamma_labels(gamma, facet_offsets)
        if clip is not None:
            flat_label = clip.label == BoundaryLabel.DIRICHLET
            labels = np.where(spherical, labels, flat_label)
        dirichlet[d] = facets[d] & labels

    domain = VoxelDomain(origin=origin, h=h, occupancy=occupancy, dirichlet=dirichlet)
    logger.info(f"Voxelized ball r={ball.radius} at h={h}: {domain.cell_count} cells, "
                f"{int(dirichlet.sum())}/{int(facets.sum())} Dirichlet facets")
    return domain


def voxelize(domain: BallDomain, h: Optional[float] = None, lattice=None) -> VoxelDomain:
    """Voxelize a ball domain document at its own spacing unless `h` is given."""
    spacing = h if h is not None else domain.h
    if spacing is None:
        raise InvalidInputError("grid spacing 'h' is required to voxelize a domain")
    return voxelize_ball(domain.ball(), spacing, gamma=domain.gamma, clip=domain.clip, lattice=lattice)


def gamma_is_empty(domain: DomainSpec) -> bool:
    if isinstance(domain, VoxelDomain):
        return domain.gamma_empty
    if isinstance(domain, BallDomain):
        return domain.gamma == GammaKind.NONE
    return False


def domain_dimension(domain: DomainSpec) -> int:
    return 3 if isinstance(domain, VoxelDomain) else domain.n


def contains_points(domain: DomainSpec, points: np.ndarray) -> np.ndarray:
    """Strict membership of each row of `points` in the domain."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(domain, VoxelDomain):
        return domain.contains_points(points)
    rel = points - domain.center_vector()
    inside = np.einsum("ij,ij->i", rel, rel) < domain.radius ** 2
    clip = getattr(domain, "clip", None)
    if clip is not None:
        normal = clip.normal.array() / np.linalg.norm(clip.normal.array())
        inside &= rel @ normal < clip.offset
    return inside


def boundary_distance(domain: DomainSpec, point: PointLike) -> float:
    if isinstance(domain, VoxelDomain):
        return domain.boundary_distance(point)
    z = as_vector(point)
    rel = z - domain.center_vector()
    dist = domain.radius - float(np.linalg.norm(rel))
    clip = getattr(domain, "clip", None)
    if clip is not None:
        normal = clip.normal.array() / np.linalg.norm(clip.normal.array())
        dist = min(dist, clip.offset - float(rel @ normal))
    return dist


def validate_charge_config(
    cfg: ChargeConfig,
    domain: DomainSpec,
    gamma_empty: Optional[bool] = None,
    min_boundary_distance: float = 0.0,
) -> ChargeConfig:
    """
    Check the ChargeConfig invariants against a domain and Γ choice.

    Raises:
        DuplicatePointError: two charge points coincide
        PointOutsideDomainError: a point is on/outside the boundary or too close to it
        ChargeBalanceError: Γ = ∅ with weights that do not sum to zero
    """
    n = domain_dimension(domain)
    if cfg.n != n:
        raise InvalidInputError(f"charge points have dimension {cfg.n}, domain has {n}")

    points = cfg.point_array()
    for k in range(cfg.m):
        for l in range(k + 1, cfg.m):
            if np.array_equal(points[k], points[l]):
                raise DuplicatePointError(f"charge points {k} and {l} coincide at {points[k].tolist()}")

    inside = contains_points(domain, points)
    for k, z in enumerate(points):
        if not inside[k]:
            raise PointOutsideDomainError(f"charge point {k} at {z.tolist()} is not interior to the domain")
        if min_boundary_distance > 0 and boundary_distance(domain, z) < min_boundary_distance:
            raise PointOutsideDomainError(
                f"charge point {k} at {z.tolist()} is closer than {min_boundary_distance} to the boundary"
            )

    if gamma_empty is None:
        gamma_empty = gamma_is_empty(domain)
    if gamma_empty:
        total = math.fsum(cfg.weights)
        scale = max(1.0, math.fsum(abs(w) for w in cfg.weights))
        if abs(total) > BALANCE_RTOL * scale:
            raise ChargeBalanceError(f"Γ = ∅ requires weights summing to zero, got {total}")
    return cfg


def balls_overlap(a: BallSpec, b: BallSpec) -> bool:
    """Open balls overlap; tangency is allowed."""
    gap = float(np.linalg.norm(a.center_vector() - b.center_vector())) - a.radius - b.radius
    return gap < -1e-12


def ball_inside(inner: BallSpec, outer: BallSpec) -> bool:
    dist = float(np.linalg.norm(inner.center_vector() - outer.center_vector()))
    return dist + inner.radius <= outer.radius + 1e-12


def ball_touches_boundary(inner: BallSpec, outer: BallSpec) -> bool:
    """Closure of `inner` meets the sphere of `outer` (inner assumed inside)."""
    dist = float(np.linalg.norm(inner.center_vector() - outer.center_vector()))
    return dist + inner.radius >= outer.radius - 1e-12


def same_ball(a: BallSpec, b: BallSpec) -> bool:
    return a.radius == b.radius and np.array_equal(a.center_vector(), b.center_vector())
