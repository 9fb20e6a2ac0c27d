"""
Tests for Dirichlet integrals over domains with excluded balls.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from robinkit.errors import GeometryError, InvalidInputError
from robinkit.kernels import ball_green, ball_green_gradient
from robinkit.quadrature import (
    Box,
    ClosedFormFunction,
    PolarShell,
    QuadratureSettings,
    cell_gradients,
    dirichlet_integral,
    polar_shells,
)
from robinkit.solver import ScalarField

SLOPE = np.array([1.0, 2.0, 3.0])


def linear_function() -> ClosedFormFunction:
    return ClosedFormFunction(
        value=lambda x: np.atleast_2d(x) @ SLOPE,
        gradient=lambda x: np.tile(SLOPE, (len(np.atleast_2d(x)), 1)),
    )


def test_linear_function_on_a_box_is_exact():
    box = Box(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0))

    value = dirichlet_integral(linear_function(), box, settings=QuadratureSettings(h=0.25))

    assert value == pytest.approx(14.0, rel=1e-12)


def test_linear_function_on_a_ball(unit_ball):
    value = dirichlet_integral(linear_function(), unit_ball, settings=QuadratureSettings(refine_ratio=None))

    assert value == pytest.approx(14.0 * 4.0 * math.pi / 3.0, rel=1e-2)


def test_excluded_ball_is_removed():
    box = Box(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0))
    excluded = [([0.5, 0.5, 0.5], 0.2)]

    value = dirichlet_integral(linear_function(), box, excluded, QuadratureSettings(refine_ratio=None))

    assert value == pytest.approx(14.0 * (1.0 - 4.0 * math.pi * 0.008 / 3.0), rel=1e-2)


def test_difference_of_equal_functions_integrates_to_zero():
    box = Box(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0))
    f = linear_function()

    assert dirichlet_integral(f - f, box, settings=QuadratureSettings(h=0.25)) == 0.0


def test_exclusion_touching_the_boundary_is_rejected(unit_ball):
    with pytest.raises(GeometryError):
        dirichlet_integral(linear_function(), unit_ball, [([0.9, 0.0, 0.0], 0.2)])


def test_overlapping_exclusions_are_rejected(unit_ball):
    with pytest.raises(GeometryError):
        dirichlet_integral(linear_function(), unit_ball, [([0.1, 0, 0], 0.2), ([-0.1, 0, 0], 0.2)])


@pytest.mark.slow
def test_green_function_energy_outside_a_small_ball(unit_ball, c3, lam3):
    g = ClosedFormFunction(
        value=lambda x: ball_green(np.atleast_2d(x), [0, 0, 0], unit_ball, c3),
        gradient=lambda x: ball_green_gradient(np.atleast_2d(x), [0, 0, 0], unit_ball, c3),
        singular_points=((0.0, 0.0, 0.0),),
    )
    r = 0.25

    value = dirichlet_integral(g, unit_ball, [([0, 0, 0], r)])

    assert value == pytest.approx(lam3 * (1.0 / r - 1.0), rel=5e-3)


def test_cell_gradients_are_exact_for_linear_fields(voxel_box):
    values = voxel_box.cell_centers() @ SLOPE
    field = ScalarField(voxel_box, values)

    grads = cell_gradients(field)

    assert np.allclose(grads, SLOPE)


def test_grid_integral_of_a_linear_field(voxel_box):
    field = ScalarField(voxel_box, voxel_box.cell_centers() @ SLOPE)

    assert dirichlet_integral(field, voxel_box) == pytest.approx(14.0 * 1.5 ** 3, rel=1e-12)


def test_grid_exclusions_must_exceed_two_cells(voxel_box):
    field = ScalarField(voxel_box, voxel_box.cell_centers() @ SLOPE)

    with pytest.raises(GeometryError):
        dirichlet_integral(field, voxel_box, [([0.75, 0.75, 0.75], 0.3)])


def centered_green(ball, c3) -> ClosedFormFunction:
    return ClosedFormFunction(
        value=lambda x: ball_green(np.atleast_2d(x), [0, 0, 0], ball, c3),
        gradient=lambda x: ball_green_gradient(np.atleast_2d(x), [0, 0, 0], ball, c3),
        singular_points=((0.0, 0.0, 0.0),),
    )


def test_small_exclusion_is_integrated_in_polar_coordinates(unit_ball, c3, lam3):
    r = 0.01

    value = dirichlet_integral(centered_green(unit_ball, c3), unit_ball, [([0, 0, 0], r)], QuadratureSettings(h=0.125))

    assert value == pytest.approx(lam3 * (1.0 / r - 1.0), rel=1e-3)


def test_absolute_error_does_not_grow_as_the_exclusion_shrinks(unit_ball, c3, lam3):
    settings = QuadratureSettings(h=0.125)
    g = centered_green(unit_ball, c3)
    errors = [
        abs(dirichlet_integral(g, unit_ball, [([0, 0, 0], r)], settings) - lam3 * (1.0 / r - 1.0))
        for r in (0.2, 0.1, 0.05)
    ]

    # below the blend radius the cells are the same for every r
    assert errors[2] <= errors[0] + 1e-10
    assert errors[1] <= errors[0] + 1e-10


def test_shell_weight_blends_from_one_to_zero():
    shell = PolarShell(center=np.zeros(3), radius=0.1, inner=0.2, outer=0.4)

    assert shell.weight(np.array([0.15, 0.2, 0.3, 0.4, 0.5])).tolist() == pytest.approx([1.0, 1.0, 0.5, 0.0, 0.0])


def test_shells_need_room_around_the_exclusion(unit_ball):
    f = linear_function()
    settings = QuadratureSettings()

    roomy, tight = polar_shells(unit_ball, [(np.zeros(3), 0.1), (np.array([0.7, 0.0, 0.0]), 0.2)], f, settings)

    assert roomy.outer == pytest.approx(0.25)
    assert roomy.inner == pytest.approx(0.125)
    # 0.3 from the boundary leaves half of that, less than r
    assert tight is None
    assert polar_shells(unit_ball, [(np.zeros(3), 0.1)], f, QuadratureSettings(shell_nodes=0)) == [None]


def test_refined_settings_shrink_every_cell():
    settings = QuadratureSettings(h=0.25, refine_ratio=8.0).refined(2.0)

    assert settings.h == 0.125
    assert settings.refine_ratio == 16.0
    assert QuadratureSettings(refine_ratio=None).refined(2.0).refine_ratio is None
    with pytest.raises(InvalidInputError):
        settings.refined(0.0)
