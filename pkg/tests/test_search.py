"""
Tests for the penalized Nelder-Mead search and the one-variable scan.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from robinkit.errors import InvalidInputError, NoFeasibleIterateError
from robinkit.models import SearchFamily, SearchObjective, SearchProblem
from robinkit.search import constraints, decode, is_feasible, minimize_slack, objective, scan_objective


@pytest.fixture
def make_pair_problem():
    def _make(**overrides) -> SearchProblem:
        data = dict(
            objective=SearchObjective.KUFAREV_SLACK,
            family=SearchFamily.SYMMETRIC_PAIR,
            weights=[1.0, -1.0],
            lower=[0.05, 0.01],
            upper=[0.95, 0.5],
            initial=[0.5, 0.2],
            margin=1e-3,
        )
        data.update(overrides)
        return SearchProblem(**data)

    return _make


@pytest.fixture
def balls_problem():
    return SearchProblem(
        objective=SearchObjective.COR25_SLACK,
        m=2,
        n=3,
        weights=[1.0, -1.0],
        lower=[-1.0] * 6 + [0.05, 0.05],
        upper=[1.0] * 6 + [0.3, 0.3],
        margin=1e-3,
    )


def test_symmetric_pair_decodes_to_mirrored_centers(make_pair_problem):
    centers, radii = decode(make_pair_problem(), np.array([0.4, 0.1]))

    assert centers.tolist() == [[0.4, 0.0, 0.0], [-0.4, 0.0, 0.0]]
    assert radii.tolist() == [0.1, 0.1]


def test_overlapping_pair_is_infeasible(make_pair_problem):
    problem = make_pair_problem()

    assert is_feasible(problem, np.array([0.5, 0.2]))
    assert not is_feasible(problem, np.array([0.1, 0.2]))
    assert constraints(problem, np.array([0.1, 0.2])).min() < 0


def test_scan_finds_the_largest_admissible_radius(make_pair_problem):
    best_x, best_value = scan_objective(make_pair_problem(), 1, samples=1000)

    # at t = 0.5 the unit-ball constraint caps rho at 0.5 - margin
    assert best_x[0] == 0.5
    assert best_x[1] == pytest.approx(0.499, abs=1e-3)
    assert np.isfinite(best_value)


def test_search_matches_the_scan_on_one_free_variable(make_pair_problem):
    problem = make_pair_problem(free=[True, False])
    scan_x, scanned = scan_objective(problem, 0, samples=1000)
    step = (problem.upper[0] - problem.lower[0]) / 999

    result = minimize_slack(problem, seed=42, iters=500)

    # the gap constraint 2t - 2rho >= margin binds at t = 0.2005
    assert result.best[1] == 0.2
    assert result.best[0] == pytest.approx(0.2005, abs=2e-4)
    assert abs(result.best[0] - scan_x[0]) <= 2 * step
    assert result.best_objective <= scanned + 1e-9
    assert is_feasible(problem, np.array(result.best))


def test_search_is_deterministic_for_a_seed(balls_problem):
    first = minimize_slack(balls_problem, seed=7, iters=200)
    second = minimize_slack(balls_problem, seed=7, iters=200)

    assert first.model_dump() == second.model_dump()


def test_random_start_depends_on_the_seed(balls_problem):
    first = minimize_slack(balls_problem, seed=1, iters=5)
    second = minimize_slack(balls_problem, seed=2, iters=5)

    assert first.trace[0].objective != second.trace[0].objective


def test_trace_records_every_evaluation(balls_problem):
    result = minimize_slack(balls_problem, seed=42, iters=300)
    incumbents = [entry.objective for entry in result.trace]

    assert [entry.iteration for entry in result.trace] == list(range(len(result.trace)))
    assert len(result.trace) > result.iterations
    assert all(b <= a for a, b in zip(incumbents, incumbents[1:]))
    assert result.improving_steps == sum(b < a for a, b in zip(incumbents, incumbents[1:]))
    assert result.best_objective == incumbents[-1]
    assert all(entry.objective <= entry.value for entry in result.trace if entry.feasible)
    assert is_feasible(balls_problem, np.array(result.best))


def test_sum_of_moduli_objective_is_positive():
    problem = SearchProblem(
        objective=SearchObjective.SUM_OF_MODULI,
        m=2,
        n=3,
        weights=[1.0, -2.0],
        lower=[-1.0] * 6 + [0.05, 0.05],
        upper=[1.0] * 6 + [0.3, 0.3],
    )
    x = np.array([0.5, 0.0, 0.0, -0.5, 0.0, 0.0, 0.1, 0.2])

    assert objective(problem, x) == pytest.approx((1.0 / 0.1 + 4.0 / 0.2) / (4.0 * math.pi), rel=1e-12)


def test_disjoint_balls_slack_stays_nonnegative(balls_problem):
    result = minimize_slack(balls_problem, seed=3, iters=300)

    assert result.slack >= 0.0
    assert result.slack == pytest.approx(result.best_objective)


def test_fixed_variables_skip_the_simplex(make_pair_problem):
    problem = make_pair_problem(free=[False, False])

    result = minimize_slack(problem, seed=0, iters=10)

    assert result.iterations == 0
    assert result.best == [0.5, 0.2]
    assert len(result.trace) == 1


def test_infeasible_initial_iterate_is_rejected(make_pair_problem):
    with pytest.raises(NoFeasibleIterateError):
        minimize_slack(make_pair_problem(initial=[0.1, 0.2]), seed=0, iters=10)


def test_iteration_budget_must_be_positive(make_pair_problem):
    with pytest.raises(InvalidInputError):
        minimize_slack(make_pair_problem(), seed=0, iters=0)


def test_scan_index_out_of_range(make_pair_problem):
    with pytest.raises(InvalidInputError):
        scan_objective(make_pair_problem(), 2)


def test_kufarev_objective_needs_two_points_in_three_dimensions():
    with pytest.raises(ValueError):
        SearchProblem(
            objective=SearchObjective.KUFAREV_SLACK,
            m=3,
            weights=[1.0, 1.0, 1.0],
            lower=[0.0] * 12,
            upper=[1.0] * 12,
        )
