"""
Finite-difference grid solver.
Solves for the regular part w = g - λ|x - z0|^{-1} of the Robin function on a
voxel domain: 7-point Laplacian, ghost-value elimination at boundary facets
(Dirichlet facets hold w = -Φ, Neumann facets prescribe the inward normal
derivative), conjugate gradients with a zero initial guess.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import cg

from robinkit.errors import (
    CompatibilityError,
    DimensionUnsupportedError,
    DiscretizationError,
    InvalidInputError,
    NonConvergenceError,
    NumericalFailureError,
    PointOutsideDomainError,
    RobinKitError,
)
from robinkit.geometry import DIRECTIONS, VoxelDomain, shift_mask, validate_charge_config
from robinkit.models import ChargeConfig, Constants, PointLike, as_vector

logger = logging.getLogger(__name__)

# mean of 1/|x| over the unit cube centred at the origin
CUBE_MEAN_INVERSE_DISTANCE = 2.3800772


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One value per occupied cell, in np.nonzero order of the occupancy mask."""

    domain: VoxelDomain
    values: np.ndarray
    source: Optional[np.ndarray] = None
    charge: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.domain.cell_count,):
            raise InvalidInputError(
                f"field has {values.size} values for {self.domain.cell_count} occupied cells"
            )
        if not np.all(np.isfinite(values)):
            raise DiscretizationError("field values must be finite")
        object.__setattr__(self, "values", values)

    def as_array(self, fill: float = np.nan) -> np.ndarray:
        """Values on the whole bounding box, `fill` outside the mask."""
        box = np.full(self.domain.shape, fill)
        box[self.domain.occupancy] = self.values
        return box

    def scaled(self, factor: float) -> "ScalarField":
        return ScalarField(self.domain, factor * self.values, self.source, factor * self.charge)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if other.domain is not self.domain:
            raise InvalidInputError("fields live on different domains")
        return ScalarField(self.domain, self.values + other.values)


def _index_map(domain: VoxelDomain) -> np.ndarray:
    index = np.full(domain.shape, -1, dtype=np.int64)
    index[domain.occupancy] = np.arange(domain.cell_count)
    return index


def assemble_laplacian(domain: VoxelDomain) -> sparse.csr_matrix:
    """
    h²·(-Δ_h) on occupied cells with boundary facets eliminated: +2 on the
    diagonal per Dirichlet facet, nothing per Neumann facet. Symmetric; positive
    definite when Γ is nonempty, constants in the kernel otherwise.
    """
    index = _index_map(domain)
    occ = domain.occupancy
    rows, cols = [], []
    diag = np.zeros(domain.cell_count)
    for d, (axis, sign) in enumerate(DIRECTIONS):
        nb_index = shift_mask(index, axis, sign, fill=-1)
        pairs = occ & (nb_index >= 0)
        rows.append(index[pairs])
        cols.append(nb_index[pairs])
        diag[index[pairs]] += 1.0
        diag[index[domain.dirichlet[d]]] += 2.0
    rows = np.concatenate(rows + [np.arange(domain.cell_count)])
    cols = np.concatenate(cols + [np.arange(domain.cell_count)])
    vals = np.concatenate([-np.ones(len(rows) - domain.cell_count), diag])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(domain.cell_count,) * 2).tocsr()


def _facet_centers(domain: VoxelDomain, d: int, mask: np.ndarray) -> np.ndarray:
    axis, sign = DIRECTIONS[d]
    idx = np.array(np.nonzero(mask)).T
    centers = domain.origin + (idx + 0.5) * domain.h
    centers[:, axis] += 0.5 * sign * domain.h
    return centers


def _boundary_rhs(domain: VoxelDomain, z0: np.ndarray, c: Constants, neumann_flux: float) -> Tuple[np.ndarray, float]:
    """
    Right-hand side for one unit charge at z0 and the discrete flux mismatch
    Σ h² q over Neumann facets (q the prescribed inward derivative of w).
    """
    index = _index_map(domain)
    h = domain.h
    b = np.zeros(domain.cell_count)
    flux = 0.0
    for d, (axis, sign) in enumerate(DIRECTIONS):
        dirichlet = domain.dirichlet[d]
        if dirichlet.any():
            xf = _facet_centers(domain, d, dirichlet)
            phi = c.lam * np.linalg.norm(xf - z0, axis=1) ** (2 - c.n)
            np.add.at(b, index[dirichlet], -2.0 * phi)
        neumann = domain.neumann[d]
        if neumann.any():
            xf = _facet_centers(domain, d, neumann)
            rel = xf - z0
            dphi_in = sign * c.lam * (c.n - 2) * rel[:, axis] / np.linalg.norm(rel, axis=1) ** c.n
            q = neumann_flux - dphi_in
            np.add.at(b, index[neumann], -h * q)
            flux += float(np.sum(h * h * q))
    return b, flux


def _check_source(domain: VoxelDomain, z0: np.ndarray):
    if len(z0) != 3:
        raise DimensionUnsupportedError("grid solves exist only for n = 3")
    if not domain.contains(z0):
        raise PointOutsideDomainError(f"source {z0.tolist()} is not inside the voxel domain")
    if domain.boundary_distance(z0) < 2.0 * domain.h:
        raise PointOutsideDomainError(
            f"source {z0.tolist()} is closer than 2h = {2.0 * domain.h} to the boundary"
        )


def _run_cg(matrix: sparse.csr_matrix, b: np.ndarray, tol: float, max_iter: int) -> Tuple[np.ndarray, SolveReport]:
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    # ||r||_2 <= tol/2 bounds the max-norm residual below tol
    w, info = cg(matrix, b, x0=np.zeros_like(b), rtol=0.0, atol=0.5 * tol, maxiter=max_iter, callback=count)
    if info < 0:
        raise NumericalFailureError(f"conjugate gradients broke down (info={info})")
    residual = float(np.max(np.abs(b - matrix @ w))) if b.size else 0.0
    return w, SolveReport(iterations=iterations, residual=residual, converged=bool(residual <= tol))


def _solve_one(
    domain: VoxelDomain,
    matrix: sparse.csr_matrix,
    z0: np.ndarray,
    c: Constants,
    tol: float,
    max_iter: int,
    charge: float,
    flux_tol: float,
) -> Tuple[ScalarField, SolveReport]:
    gamma_empty = domain.gamma_empty
    neumann_flux = 1.0 / domain.facet_area_total() if gamma_empty else 0.0
    b, flux = _boundary_rhs(domain, z0, c, neumann_flux)
    if gamma_empty:
        if abs(flux) > flux_tol:
            raise CompatibilityError(
                f"discrete boundary flux misses the unit charge by {abs(flux):.3e} (allowed {flux_tol:.1e})"
            )
        b = b - b.mean()
    b = charge * b

    w, report = _run_cg(matrix, b, tol, max_iter)
    if gamma_empty:
        w = w - w.mean()
    if not report.converged:
        logger.warning(f"Grid solve did not converge: residual {report.residual:.3e} after {report.iterations} iterations")
    else:
        logger.info(f"Grid solve converged in {report.iterations} iterations, residual {report.residual:.3e}")
    return ScalarField(domain, w, source=z0, charge=charge), report


def solve_robin_regular_part(
    domain: VoxelDomain,
    z0: PointLike,
    c: Constants,
    tol: float,
    max_iter: int,
    charge: float = 1.0,
) -> Tuple[ScalarField, SolveReport]:
    """
    Regular part of g_Γ(·, z0, D) for a charge at z0. Γ = ∅ domains are refused
    here: a single charge cannot balance, so they go through solve_regular_parts.
    """
    z0 = as_vector(z0)
    if c.n != 3:
        raise DimensionUnsupportedError("grid solves exist only for n = 3")
    _check_source(domain, z0)
    if domain.gamma_empty:
        validate_charge_config(ChargeConfig(points=[z0], weights=[charge]), domain, gamma_empty=True)
    try:
        return _solve_one(domain, assemble_laplacian(domain), z0, c, tol, max_iter, charge, flux_tol=np.inf)
    except RobinKitError:
        raise
    except Exception as e:
        logger.error(f"Grid solve failed: {str(e)}")
        raise NumericalFailureError(f"grid solve failed: {str(e)}")


def solve_regular_parts(
    domain: VoxelDomain,
    cfg: ChargeConfig,
    c: Constants,
    tol: float,
    max_iter: int,
    flux_tol: float = 1e-2,
) -> List[Tuple[ScalarField, SolveReport]]:
    """
    Unit-charge regular parts for every point of a charge configuration. For
    Γ = ∅ the weights must balance; each field carries the 1/μ₂(∂D) boundary
    flux and is fixed by a zero domain mean.
    """
    if c.n != 3:
        raise DimensionUnsupportedError("grid solves exist only for n = 3")
    validate_charge_config(cfg, domain, min_boundary_distance=2.0 * domain.h)
    try:
        matrix = assemble_laplacian(domain)
        results = []
        for z in cfg.point_array():
            _check_source(domain, z)
            results.append(_solve_one(domain, matrix, z, c, tol, max_iter, 1.0, flux_tol))
        return results
    except RobinKitError:
        raise
    except Exception as e:
        logger.error(f"Grid solve failed: {str(e)}")
        raise NumericalFailureError(f"grid solve failed: {str(e)}")


def interpolate(field: ScalarField, points) -> np.ndarray:
    """Trilinear interpolation; cells outside the mask take their nearest occupied value."""
    domain = field.domain
    box = field.as_array(fill=0.0)
    nearest = ndimage.distance_transform_edt(~domain.occupancy, return_distances=False, return_indices=True)
    filled = box[tuple(nearest)]
    interp = RegularGridInterpolator(domain.axes(), filled, method="linear", bounds_error=False, fill_value=None)
    return interp(np.atleast_2d(np.asarray(points, dtype=float)))


def full_field(field: ScalarField, c: Constants) -> ScalarField:
    """Regular part plus charge·λ|x - z0|^{-1} on every cell except the source cell."""
    if field.source is None:
        raise InvalidInputError("field has no source point")
    centers = field.domain.cell_centers()
    dist = np.linalg.norm(centers - field.source, axis=1)
    values = field.values.copy()
    away = dist > 0
    values[away] += field.charge * c.lam * dist[away] ** (2 - c.n)
    # a source sitting on a cell center gets the cell average of the pole
    values[~away] += field.charge * c.lam * CUBE_MEAN_INVERSE_DISTANCE / field.domain.h
    return ScalarField(field.domain, values, source=field.source, charge=field.charge)


def robin_radius_grid(domain: VoxelDomain, z0: PointLike, c: Constants, tol: float, max_iter: int = 100_000) -> float:
    """r = (-w(z0)/λ)^{1/(2-n)} from the interpolated regular part at z0."""
    z0 = as_vector(z0)
    field, report = solve_robin_regular_part(domain, z0, c, tol, max_iter)
    if not report.converged:
        raise NonConvergenceError(
            f"solver stopped at residual {report.residual:.3e} after {report.iterations} iterations"
        )
    w0 = float(interpolate(field, z0)[0])
    if w0 >= 0.0:
        raise DiscretizationError(f"regular part at the source is {w0:.6g} >= 0; no real Robin radius")
    radius = (-w0 / c.lam) ** (1.0 / (2 - c.n))
    logger.info(f"Grid Robin radius at {z0.tolist()}: {radius:.6f} (h={domain.h})")
    return radius
