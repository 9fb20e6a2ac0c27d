"""
Closed-form kernels.
Fundamental solution, Green function and harmonic radius of a ball, the
Neumann function of the 3D unit ball and its two-point reduced modulus.
Every kernel accepts a single point or an (N, n) array of points for x.
"""

import logging
import math
from typing import Tuple, Union

import numpy as np

from robinkit.errors import InvalidInputError, PointOutsideDomainError, SingularityError
from robinkit.models import BallSpec, Constants, PointLike, as_vector

logger = logging.getLogger(__name__)

KernelValue = Union[float, np.ndarray]

FOUR_PI = 4.0 * math.pi


def _batch(x: PointLike) -> Tuple[np.ndarray, bool]:
    arr = as_vector(x)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def _out(values: np.ndarray, single: bool) -> KernelValue:
    return float(values[0]) if single else values


def _require_distinct(dist: np.ndarray):
    if np.any(dist == 0.0):
        raise SingularityError("kernel evaluated at coincident points x = y")


def _require_inside(rel_norm: np.ndarray, radius: float, what: str):
    if np.any(rel_norm >= radius):
        raise PointOutsideDomainError(f"{what} is not strictly inside the ball of radius {radius}")


def fundamental_solution(x: PointLike, y: PointLike, c: Constants) -> KernelValue:
    """λ_n |x - y|^{2-n}."""
    xs, single = _batch(x)
    dist = np.linalg.norm(xs - as_vector(y), axis=1)
    _require_distinct(dist)
    return _out(c.lam * dist ** (2 - c.n), single)


def fundamental_solution_gradient(x: PointLike, y: PointLike, c: Constants) -> np.ndarray:
    """x-gradient of λ_n |x - y|^{2-n}."""
    xs, single = _batch(x)
    diff = xs - as_vector(y)
    dist = np.linalg.norm(diff, axis=1)
    _require_distinct(dist)
    grad = c.lam * (2 - c.n) * dist[:, None] ** (-c.n) * diff
    return grad[0] if single else grad


def _reflected(xr: np.ndarray, yr: np.ndarray, radius: float) -> Tuple[np.ndarray, float]:
    """Image vector R = |y'| x'/ρ - ρ y'/|y'| and |y'|, for y' != 0."""
    ynorm = float(np.linalg.norm(yr))
    return ynorm * xr / radius - radius * yr / ynorm, ynorm


def ball_green(x: PointLike, y: PointLike, ball: BallSpec, c: Constants) -> KernelValue:
    """
    Dirichlet Green function of a ball:
    λ_n (|x-y|^{2-n} - | |y'| x'/ρ - ρ y'/|y'| |^{2-n}) with x' = x - center, y' = y - center.
    At y' = 0 the reflected term takes its limit ρ^{2-n}.
    """
    xs, single = _batch(x)
    center = ball.center_vector()
    xr = xs - center
    yr = as_vector(y) - center
    _require_inside(np.linalg.norm(xr, axis=1), ball.radius, "x")
    _require_inside(np.array([np.linalg.norm(yr)]), ball.radius, "y")
    dist = np.linalg.norm(xr - yr, axis=1)
    _require_distinct(dist)

    if not np.any(yr):
        image = np.full(len(xs), ball.radius ** (2 - c.n))
    else:
        refl, _ = _reflected(xr, yr, ball.radius)
        image = np.linalg.norm(refl, axis=1) ** (2 - c.n)
    return _out(c.lam * (dist ** (2 - c.n) - image), single)


def ball_green_gradient(x: PointLike, y: PointLike, ball: BallSpec, c: Constants) -> np.ndarray:
    """x-gradient of ball_green."""
    xs, single = _batch(x)
    center = ball.center_vector()
    xr = xs - center
    yr = as_vector(y) - center
    _require_inside(np.linalg.norm(xr, axis=1), ball.radius, "x")
    grad = fundamental_solution_gradient(xs, y, c)
    if np.any(yr):
        refl, ynorm = _reflected(xr, yr, ball.radius)
        rnorm = np.linalg.norm(refl, axis=1)
        grad = grad - c.lam * (2 - c.n) * rnorm[:, None] ** (-c.n) * refl * (ynorm / ball.radius)
    return grad[0] if single else grad


def ball_harmonic_radius(y: PointLike, ball: BallSpec, c: Constants) -> float:
    """r(B, y, ∂B) = (ρ² - |y - center|²)/ρ."""
    yr = as_vector(y) - ball.center_vector()
    if len(yr) != c.n:
        raise InvalidInputError(f"point has dimension {len(yr)}, constants are for n={c.n}")
    dist2 = float(yr @ yr)
    _require_inside(np.array([math.sqrt(dist2)]), ball.radius, "y")
    return (ball.radius ** 2 - dist2) / ball.radius


def _neumann_terms(xs: np.ndarray, y: np.ndarray):
    """P = |y| x - y/|y| and L = 1 - (x, y) + |P|; note |x|y|² - y|/|y| = |P|."""
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        raise SingularityError("the unit-ball Neumann formula is undefined at y = 0")
    p = ynorm * xs - y / ynorm
    pnorm = np.linalg.norm(p, axis=1)
    log_arg = 1.0 - xs @ y + pnorm
    return ynorm, p, pnorm, log_arg


def _check_unit_ball(xs: np.ndarray, y: np.ndarray):
    if xs.shape[1] != 3 or len(y) != 3:
        raise InvalidInputError("the Neumann function is available for n = 3 only")
    _require_inside(np.linalg.norm(xs, axis=1), 1.0, "x")
    _require_inside(np.array([np.linalg.norm(y)]), 1.0, "y")


def ball_neumann_3d(x: PointLike, y: PointLike) -> KernelValue:
    """
    Neumann function of the unit ball in R³:
    (1/4π)(1/|x-y| + |y|/|x|y|² - y| - log|1 - (x,y) + |x|y|² - y|/|y||).
    """
    xs, single = _batch(x)
    y = as_vector(y)
    _check_unit_ball(xs, y)
    dist = np.linalg.norm(xs - y, axis=1)
    _require_distinct(dist)
    _, _, pnorm, log_arg = _neumann_terms(xs, y)
    values = (1.0 / dist + 1.0 / pnorm - np.log(np.abs(log_arg))) / FOUR_PI
    return _out(values, single)


def ball_neumann_3d_gradient(x: PointLike, y: PointLike) -> np.ndarray:
    """x-gradient of ball_neumann_3d."""
    xs, single = _batch(x)
    y = as_vector(y)
    _check_unit_ball(xs, y)
    diff = xs - y
    dist = np.linalg.norm(diff, axis=1)
    _require_distinct(dist)
    ynorm, p, pnorm, log_arg = _neumann_terms(xs, y)
    grad_direct = -diff / dist[:, None] ** 3
    grad_image = -ynorm * p / pnorm[:, None] ** 3
    grad_log = (-y[None, :] + ynorm * p / pnorm[:, None]) / log_arg[:, None]
    grad = (grad_direct + grad_image - grad_log) / FOUR_PI
    return grad[0] if single else grad


def ball_neumann_regular_diagonal(y: PointLike) -> float:
    """lim_{x→y} [g_∅(x, y, U) - (1/4π)/|x-y|] = (1/4π)(1/(1-|y|²) - log(2(1-|y|²)))."""
    y = as_vector(y)
    if len(y) != 3:
        raise InvalidInputError("the Neumann function is available for n = 3 only")
    s = 1.0 - float(y @ y)
    if s <= 0.0:
        raise PointOutsideDomainError(f"|y| = {math.sqrt(1.0 - s)} is not inside the unit ball")
    return (1.0 / s - math.log(2.0 * s)) / FOUR_PI


def _check_pair(a1: np.ndarray, a2: np.ndarray):
    if np.array_equal(a1, a2):
        raise SingularityError("the two charge points coincide")
    if not (np.any(a1) and np.any(a2)):
        raise SingularityError("charge points must be nonzero for the unit-ball Neumann formula")


def neumann_modulus_two_points_3d(a1: PointLike, a2: PointLike) -> float:
    """M(U, ∅, {a1, a2}, {1, -1}) = g_reg(a1) + g_reg(a2) - 2 g_∅(a1, a2, U)."""
    a1, a2 = as_vector(a1), as_vector(a2)
    _check_pair(a1, a2)
    return (
        ball_neumann_regular_diagonal(a1)
        + ball_neumann_regular_diagonal(a2)
        - 2.0 * ball_neumann_3d(a1, a2)
    )


def kufarev_display_rhs_3d(a1: PointLike, a2: PointLike) -> float:
    """
    Explicit right-hand side of the n = 3 two-point inequality, written out
    term by term. Equals 4π · neumann_modulus_two_points_3d(a1, a2).
    """
    a1, a2 = as_vector(a1), as_vector(a2)
    _check_pair(a1, a2)
    for a in (a1, a2):
        if len(a) != 3 or float(a @ a) >= 1.0:
            raise PointOutsideDomainError(f"{a.tolist()} is not a point of the unit ball in R³")
    n1 = float(a1 @ a1)
    n2 = float(a2 @ a2)
    norm2 = math.sqrt(n2)
    image = float(np.linalg.norm(a1 * n2 - a2))
    return (
        -2.0 / float(np.linalg.norm(a1 - a2))
        - 2.0 * norm2 / image
        + 2.0 * math.log(abs(1.0 - float(a1 @ a2) + image / norm2))
        + 1.0 / (1.0 - n1)
        + 1.0 / (1.0 - n2)
        - math.log(4.0 * (1.0 - n1) * (1.0 - n2))
    )
