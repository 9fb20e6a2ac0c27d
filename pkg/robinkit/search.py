"""
Extremal search over ball configurations.
Nelder-Mead on objective + penalty·Σ min(0, g)², one restart from the
incumbent with a doubled penalty. Every evaluation is recorded in order next
to the best feasible objective seen so far.
"""

import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from robinkit.errors import InvalidInputError, NoFeasibleIterateError
from robinkit.geometry import make_constants
from robinkit.kernels import neumann_modulus_two_points_3d
from robinkit.models import SearchFamily, SearchObjective, SearchProblem, SearchResult, TraceEntry

logger = logging.getLogger(__name__)

MAX_INIT_ATTEMPTS = 10_000
INFEASIBLE_VALUE = 1e30

# smallest admissible radius and center norm
TINY = 1e-12


def decode(problem: SearchProblem, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Centers (m, n) and radii (m,) for a variable vector."""
    if problem.family == SearchFamily.SYMMETRIC_PAIR:
        t, rho = float(x[0]), float(x[1])
        centers = np.array([[t, 0.0, 0.0], [-t, 0.0, 0.0]])
        return centers, np.array([rho, rho])
    split = problem.m * problem.n
    return np.asarray(x[:split], dtype=float).reshape(problem.m, problem.n), np.asarray(x[split:], dtype=float)


def constraints(problem: SearchProblem, x: np.ndarray) -> np.ndarray:
    """Constraint values; the configuration is feasible when all are >= 0."""
    centers, radii = decode(problem, x)
    values = [np.asarray(x) - np.asarray(problem.lower), np.asarray(problem.upper) - np.asarray(x)]
    values.append(radii - max(problem.margin, TINY))
    gaps = [
        float(np.linalg.norm(centers[i] - centers[j])) - radii[i] - radii[j] - problem.margin
        for i in range(problem.m)
        for j in range(i)
    ]
    values.append(np.asarray(gaps))
    if problem.objective == SearchObjective.KUFAREV_SLACK:
        norms = np.linalg.norm(centers, axis=1)
        values.append(1.0 - norms - radii - problem.margin)
        values.append(norms - TINY)
    return np.concatenate([np.atleast_1d(v) for v in values])


def is_feasible(problem: SearchProblem, x: np.ndarray) -> bool:
    return bool(np.all(constraints(problem, x) >= 0.0))


def _disjoint_balls_slack(problem: SearchProblem, centers: np.ndarray, radii: np.ndarray) -> float:
    n = centers.shape[1]
    w = np.asarray(problem.weights)
    lhs = -math.fsum(w * w * radii ** (2 - n))
    rhs = math.fsum(
        w[l] * w[p] * float(np.linalg.norm(centers[l] - centers[p])) ** (2 - n)
        for l in range(len(w))
        for p in range(len(w))
        if p != l
    )
    return rhs - lhs


def slack(problem: SearchProblem, x: np.ndarray) -> float:
    """Signed slack of the inequality behind the objective at a configuration."""
    centers, radii = decode(problem, x)
    if problem.objective == SearchObjective.KUFAREV_SLACK:
        lam = make_constants(3).lam
        return neumann_modulus_two_points_3d(centers[0], centers[1]) + lam * float(np.sum(1.0 / radii))
    return _disjoint_balls_slack(problem, centers, radii)


def objective(problem: SearchProblem, x: np.ndarray) -> float:
    if problem.objective == SearchObjective.SUM_OF_MODULI:
        _, radii = decode(problem, x)
        lam = make_constants(problem.n).lam
        w = np.asarray(problem.weights)
        return lam * math.fsum(w * w * radii ** (2 - problem.n))
    return slack(problem, x)


def _initial_point(problem: SearchProblem, rng: np.random.Generator) -> np.ndarray:
    if problem.initial is not None:
        x0 = np.asarray(problem.initial, dtype=float)
        if not is_feasible(problem, x0):
            raise NoFeasibleIterateError("the supplied initial iterate violates the constraints")
        return x0
    lower, upper = np.asarray(problem.lower), np.asarray(problem.upper)
    for _ in range(MAX_INIT_ATTEMPTS):
        x0 = rng.uniform(lower, upper)
        if is_feasible(problem, x0):
            return x0
    raise NoFeasibleIterateError(f"no feasible starting point in {MAX_INIT_ATTEMPTS} samples")


class _Recorder:
    """Counts evaluations, keeps the best feasible one and traces them all."""

    def __init__(self, problem: SearchProblem, x0: np.ndarray, mask: np.ndarray):
        self.problem = problem
        self.x0 = x0
        self.mask = mask
        self.evaluations = 0
        self.improving_steps = 0
        self.best_x = x0.copy()
        self.best_value = objective(problem, x0)
        self.trace: List[TraceEntry] = [TraceEntry(iteration=0, objective=self.best_value, value=self.best_value)]

    def full(self, y: np.ndarray) -> np.ndarray:
        x = self.x0.copy()
        x[self.mask] = y
        return x

    def _record(self, value: float, feasible: bool) -> float:
        self.trace.append(
            TraceEntry(iteration=self.evaluations, objective=self.best_value, value=value, feasible=feasible)
        )
        return value

    def penalized(self, penalty: float) -> Callable[[np.ndarray], float]:
        def f(y):
            self.evaluations += 1
            x = self.full(y)
            g = constraints(self.problem, x)
            violation = float(np.sum(np.minimum(g, 0.0) ** 2))
            if violation == 0.0:
                value = objective(self.problem, x)
                if value < self.best_value:
                    self.best_value = value
                    self.best_x = x
                    self.improving_steps += 1
                return self._record(value, feasible=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                try:
                    value = objective(self.problem, x)
                except (InvalidInputError, ZeroDivisionError):
                    value = math.inf
            if not math.isfinite(value):
                return self._record(INFEASIBLE_VALUE, feasible=False)
            return self._record(value + penalty * violation, feasible=False)

        return f


def minimize_slack(problem: SearchProblem, seed: int, iters: int) -> SearchResult:
    """Deterministic for a given (problem, seed, iters); returns the best feasible iterate seen."""
    if iters < 1:
        raise InvalidInputError("iters must be at least 1")
    rng = np.random.default_rng(seed)
    x0 = _initial_point(problem, rng)
    mask = problem.free_mask()
    recorder = _Recorder(problem, x0, mask)

    iterations = 0
    if mask.any():
        options = {"maxiter": iters, "xatol": 1e-10, "fatol": 1e-14, "adaptive": False}
        first = minimize(recorder.penalized(problem.penalty), x0[mask], method="Nelder-Mead", options=options)
        iterations = int(first.nit)
        remaining = iters - iterations
        if remaining > 0:
            logger.info(f"Simplex stagnated after {iterations} iterations; restarting from the incumbent")
            options["maxiter"] = remaining
            second = minimize(
                recorder.penalized(2.0 * problem.penalty),
                recorder.best_x[mask],
                method="Nelder-Mead",
                options=options,
            )
            iterations += int(second.nit)

    best = recorder.best_x
    result = SearchResult(
        best=best.tolist(),
        best_objective=recorder.best_value,
        slack=slack(problem, best),
        iterations=iterations,
        improving_steps=recorder.improving_steps,
        trace=recorder.trace,
    )
    logger.info(
        f"Search {problem.objective.value}: best {result.best_objective:.10g} after {iterations} iterations, "
        f"{recorder.evaluations} evaluations"
    )
    return result


def scan_objective(
    problem: SearchProblem,
    index: int,
    samples: int = 1000,
    base: Optional[List[float]] = None,
) -> Tuple[List[float], float]:
    """Exhaustive scan of one variable over its bounds; returns the best feasible point and value."""
    if not 0 <= index < problem.size:
        raise InvalidInputError(f"variable index {index} out of range")
    base = np.asarray(base if base is not None else (problem.initial or
                      (np.asarray(problem.lower) + np.asarray(problem.upper)) / 2.0), dtype=float)
    best_x, best_value = None, math.inf
    for value in np.linspace(problem.lower[index], problem.upper[index], samples):
        x = base.copy()
        x[index] = value
        if not is_feasible(problem, x):
            continue
        current = objective(problem, x)
        if current < best_value:
            best_x, best_value = x, current
    if best_x is None:
        raise NoFeasibleIterateError("no feasible point on the scan line")
    return best_x.tolist(), best_value
