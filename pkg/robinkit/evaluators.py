"""
Green-function evaluators.
A GreenEvaluator pairs (x, z_k) to g_Γ(x, z_k, D) and gives the diagonal
g_Γ(z, z, D) = -λ r(D, z, Γ)^{2-n} through the Robin radius. Backends: the
closed-form Dirichlet ball, the closed-form Neumann unit ball, and grid fields.
"""

import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Union

import numpy as np

from robinkit.artifacts import decode_voxel_document
from robinkit.config import get_settings
from robinkit.errors import DimensionUnsupportedError, InvalidInputError, NonConvergenceError
from robinkit.geometry import VoxelDomain, boundary_distance, make_constants, voxelize
from robinkit.kernels import (
    ball_green,
    ball_green_gradient,
    ball_harmonic_radius,
    ball_neumann_3d,
    ball_neumann_3d_gradient,
    ball_neumann_regular_diagonal,
    fundamental_solution,
)
from robinkit.models import (
    BallDomain,
    BallSpec,
    ChargeConfig,
    Constants,
    GammaKind,
    PointLike,
    VoxelDocument,
    as_vector,
)
from robinkit.solver import ScalarField, SolveReport, interpolate, solve_regular_parts

logger = logging.getLogger(__name__)

CLOSED_FORM_ACCURACY = 1e-12


class GreenEvaluator(ABC):
    """Backend-independent access to g_Γ(·, ·, D)."""

    constants: Constants
    accuracy: float
    gamma_empty: bool
    domain: object

    @property
    def n(self) -> int:
        return self.constants.n

    @abstractmethod
    def pair(self, x, y: PointLike):
        """g(x, y) for x ≠ y; x may be an (N, n) array."""

    @abstractmethod
    def diagonal(self, z: PointLike) -> float:
        """g(z, z) := lim_{x→z} [g(x, z) - λ|x - z|^{2-n}] = -λ r^{2-n}."""

    def gradient(self, x, y: PointLike) -> np.ndarray:
        raise InvalidInputError(f"{type(self).__name__} has no analytic gradient")

    @property
    def has_gradient(self) -> bool:
        return False

    def robin_radius(self, z: PointLike) -> float:
        value = self.diagonal(z)
        if value >= 0:
            raise InvalidInputError(f"diagonal value {value:.6g} >= 0 has no Robin radius")
        return (-value / self.constants.lam) ** (1.0 / (2 - self.n))

    def pair_matrix(self, points: np.ndarray) -> np.ndarray:
        """G[l, k] = g(z_l, z_k), diagonal by the Robin-radius convention."""
        points = np.asarray(points, dtype=float)
        m = len(points)
        matrix = np.empty((m, m))
        for k in range(m):
            for l in range(m):
                matrix[l, k] = self.diagonal(points[k]) if l == k else float(self.pair(points[l], points[k]))
        defect = float(np.max(np.abs(matrix - matrix.T))) if m > 1 else 0.0
        if defect > max(10.0 * self.accuracy, 1e-12):
            logger.warning(f"Pair matrix symmetry defect {defect:.3e} exceeds backend accuracy {self.accuracy:.1e}")
        return matrix


class BallGreenEvaluator(GreenEvaluator):
    """Dirichlet Green function of a ball, any n >= 3."""

    gamma_empty = False

    def __init__(self, ball: BallSpec, constants: Optional[Constants] = None):
        self.domain = ball
        self.constants = constants or make_constants(ball.n)
        self.accuracy = CLOSED_FORM_ACCURACY

    def pair(self, x, y):
        return ball_green(x, y, self.domain, self.constants)

    def diagonal(self, z):
        r = ball_harmonic_radius(z, self.domain, self.constants)
        return -self.constants.lam * r ** (2 - self.n)

    def gradient(self, x, y):
        return ball_green_gradient(x, y, self.domain, self.constants)

    @property
    def has_gradient(self) -> bool:
        return True


class NeumannBallEvaluator(GreenEvaluator):
    """Neumann function of the unit ball in R³ (Γ = ∅)."""

    gamma_empty = True

    def __init__(self):
        self.domain = BallDomain(center=[0.0, 0.0, 0.0], radius=1.0, gamma=GammaKind.NONE)
        self.constants = make_constants(3)
        self.accuracy = CLOSED_FORM_ACCURACY

    def pair(self, x, y):
        return ball_neumann_3d(x, y)

    def diagonal(self, z):
        return ball_neumann_regular_diagonal(z)

    def gradient(self, x, y):
        return ball_neumann_3d_gradient(x, y)

    @property
    def has_gradient(self) -> bool:
        return True


class GridGreenEvaluator(GreenEvaluator):
    """
    Grid-backed evaluator. Solves one regular part per charge point at
    construction; sources are limited to the configuration's points.
    """

    def __init__(
        self,
        domain: VoxelDomain,
        cfg: ChargeConfig,
        constants: Optional[Constants] = None,
        tol: float = 1e-8,
        max_iter: int = 100_000,
        flux_tol: float = 1e-2,
    ):
        self.domain = domain
        self.constants = constants or make_constants(3)
        self.gamma_empty = domain.gamma_empty
        self.cfg = cfg
        solved = solve_regular_parts(domain, cfg, self.constants, tol, max_iter, flux_tol)
        self.reports: List[SolveReport] = [report for _, report in solved]
        for report in self.reports:
            if not report.converged:
                raise NonConvergenceError(
                    f"solver stopped at residual {report.residual:.3e} after {report.iterations} iterations"
                )
        self.fields: List[ScalarField] = [field for field, _ in solved]
        self._points = cfg.point_array()
        d_min = min(boundary_distance(domain, z) for z in self._points)
        self.accuracy = self.constants.lam * (self.n - 2) * domain.h / d_min ** 2 + tol

    def _source(self, y) -> int:
        y = as_vector(y)
        hits = np.nonzero(np.all(self._points == y, axis=1))[0]
        if len(hits) == 0:
            raise InvalidInputError(f"grid evaluator has no solved field for source {y.tolist()}")
        return int(hits[0])

    def field(self, y) -> ScalarField:
        return self.fields[self._source(y)]

    def regular(self, x, y):
        x = as_vector(x)
        values = interpolate(self.fields[self._source(y)], x)
        return float(values[0]) if x.ndim == 1 else values

    def pair(self, x, y):
        return self.regular(x, y) + fundamental_solution(x, y, self.constants)

    def diagonal(self, z):
        return float(self.regular(z, z))


def _is_unit_ball_3d(domain: BallDomain) -> bool:
    return domain.n == 3 and domain.radius == 1.0 and not np.any(domain.center_vector())


def make_evaluator(
    domain: Union[BallSpec, BallDomain, VoxelDocument, VoxelDomain],
    cfg: Optional[ChargeConfig] = None,
    constants: Optional[Constants] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    flux_tol: Optional[float] = None,
    h: Optional[float] = None,
) -> GreenEvaluator:
    """Pick the backend for a domain document: closed form when one exists, grid otherwise."""
    settings = get_settings()
    tol = tol if tol is not None else settings.tol
    max_iter = max_iter if max_iter is not None else settings.max_iter
    flux_tol = flux_tol if flux_tol is not None else settings.flux_tol

    if isinstance(domain, BallDomain):
        if domain.closed_form and domain.gamma == GammaKind.FULL:
            return BallGreenEvaluator(domain.ball(), constants)
        if domain.closed_form and domain.gamma == GammaKind.NONE and _is_unit_ball_3d(domain):
            return NeumannBallEvaluator()
        if domain.n != 3:
            raise DimensionUnsupportedError(f"no closed form for this boundary choice in n={domain.n}; grids need n = 3")
        domain = voxelize(domain, h if h is not None else (domain.h or settings.grid_h))
    elif isinstance(domain, BallSpec):
        return BallGreenEvaluator(domain, constants)
    elif isinstance(domain, VoxelDocument):
        domain = decode_voxel_document(domain)

    if cfg is None:
        raise InvalidInputError("grid evaluators need the charge configuration up front")
    logger.info(f"Using grid evaluator on {domain.cell_count} cells at h={domain.h}")
    return GridGreenEvaluator(domain, cfg, constants, tol, max_iter, flux_tol)
