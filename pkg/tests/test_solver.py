"""
Tests for the finite-difference solver on voxel domains.
"""

from __future__ import annotations

import numpy as np
import pytest

from robinkit.errors import ChargeBalanceError, NonConvergenceError, PointOutsideDomainError
from robinkit.geometry import voxelize_ball
from robinkit.models import BallSpec, CapSelection, ChargeConfig, GammaKind
from robinkit.solver import (
    ScalarField,
    assemble_laplacian,
    full_field,
    interpolate,
    robin_radius_grid,
    solve_regular_parts,
    solve_robin_regular_part,
)

UNIT = BallSpec(center=[0.0, 0.0, 0.0], radius=1.0)


def test_laplacian_is_symmetric_with_dirichlet_rows(voxel_ball):
    matrix = assemble_laplacian(voxel_ball)

    assert abs(matrix - matrix.T).max() == 0.0
    row_sums = matrix @ np.ones(voxel_ball.cell_count)
    assert np.all(row_sums >= 0.0)
    assert row_sums.sum() == pytest.approx(2.0 * voxel_ball.dirichlet.sum())


def test_laplacian_annihilates_constants_without_gamma(voxel_box):
    matrix = assemble_laplacian(voxel_box)

    assert np.allclose(matrix @ np.ones(voxel_box.cell_count), 0.0)


def test_interpolation_is_exact_for_linear_fields(voxel_box):
    slope = np.array([0.5, -1.0, 2.0])
    field = ScalarField(voxel_box, voxel_box.cell_centers() @ slope)
    points = np.array([[0.6, 0.7, 0.8], [1.0, 0.4, 0.9]])

    assert np.allclose(interpolate(field, points), points @ slope)


def test_single_charge_is_refused_without_gamma(c3):
    domain = voxelize_ball(UNIT, 0.125, gamma=GammaKind.NONE)

    with pytest.raises(ChargeBalanceError):
        solve_robin_regular_part(domain, [0, 0, 0], c3, 1e-8, 1000)


def test_source_near_the_boundary_is_refused(voxel_ball, c3):
    with pytest.raises(PointOutsideDomainError):
        solve_robin_regular_part(voxel_ball, [0.875, 0, 0], c3, 1e-8, 1000)


def test_iteration_cap_is_reported(voxel_ball, c3):
    field, report = solve_robin_regular_part(voxel_ball, [0, 0, 0], c3, 1e-12, 1)

    assert not report.converged
    assert report.iterations == 1
    with pytest.raises(NonConvergenceError):
        robin_radius_grid(voxel_ball, [0, 0, 0], c3, 1e-12, max_iter=1)


def test_regular_part_solves_on_a_coarse_ball(voxel_ball, c3, lam3):
    field, report = solve_robin_regular_part(voxel_ball, [0, 0, 0], c3, 1e-10, 10_000)

    assert report.converged
    assert report.residual <= 1e-10
    w0 = float(interpolate(field, [0, 0, 0])[0])
    assert w0 == pytest.approx(-lam3, rel=0.2)


def test_full_field_adds_the_pole(voxel_ball, c3, lam3):
    field, _ = solve_robin_regular_part(voxel_ball, [0, 0, 0], c3, 1e-10, 10_000)
    full = full_field(field, c3)

    centers = voxel_ball.cell_centers()
    away = np.linalg.norm(centers, axis=1) > 0
    expected = field.values[away] + lam3 / np.linalg.norm(centers[away], axis=1)
    assert np.allclose(full.values[away], expected)


@pytest.mark.slow
def test_robin_radius_of_the_unit_ball_center(c3):
    domain = voxelize_ball(UNIT, 1.0 / 16.0)

    assert robin_radius_grid(domain, [0, 0, 0], c3, 1e-10) == pytest.approx(1.0, rel=0.1)


@pytest.mark.slow
def test_robin_radius_grows_when_gamma_shrinks(c3):
    full = voxelize_ball(UNIT, 1.0 / 16.0)
    half = voxelize_ball(UNIT, 1.0 / 16.0, gamma=CapSelection(cap_normal=[0, 0, 1], cap_offset=0.0))
    z = [0.0, 0.0, -0.25]

    assert robin_radius_grid(half, z, c3, 1e-10) > robin_radius_grid(full, z, c3, 1e-10)


@pytest.mark.slow
def test_free_boundary_fields_are_gauged(c3):
    domain = voxelize_ball(UNIT, 0.125, gamma=GammaKind.NONE)
    cfg = ChargeConfig(points=[[0.25, 0, 0], [-0.25, 0, 0]], weights=[1.0, -1.0])

    results = solve_regular_parts(domain, cfg, c3, 1e-9, 20_000, flux_tol=0.1)

    for field, report in results:
        assert report.converged
        assert abs(field.values.mean()) < 1e-10


@pytest.mark.slow
def test_robin_radius_error_decays_with_the_spacing(c3):
    errors = [
        abs(robin_radius_grid(voxelize_ball(UNIT, h), [0, 0, 0], c3, 1e-10) - 1.0)
        for h in (1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0)
    ]

    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.03


@pytest.mark.slow
def test_robin_radius_increases_through_nested_caps(c3):
    h = 1.0 / 16.0
    full = robin_radius_grid(voxelize_ball(UNIT, h), [0, 0, 0], c3, 1e-10)
    slack = 2.0 * abs(full - 1.0)
    radii = [full]
    # caps covering 3/4, 1/2 and 1/4 of the sphere
    for offset in (-0.5, 0.0, 0.5):
        cap = CapSelection(cap_normal=[0, 0, 1], cap_offset=offset)
        radii.append(robin_radius_grid(voxelize_ball(UNIT, h, gamma=cap), [0, 0, 0], c3, 1e-10))

    assert all(b >= a - slack for a, b in zip(radii, radii[1:]))
    assert radii[-1] > radii[0]


def test_regular_part_is_linear_in_the_charge(voxel_ball, c3):
    single, _ = solve_robin_regular_part(voxel_ball, [0.25, 0, 0], c3, 1e-12, 10_000)
    double, _ = solve_robin_regular_part(voxel_ball, [0.25, 0, 0], c3, 1e-12, 10_000, charge=2.0)

    assert double.charge == 2.0
    assert np.allclose(double.values, 2.0 * single.values, rtol=0.0, atol=1e-8)


def test_regular_part_obeys_the_discrete_maximum_principle(voxel_ball, c3, lam3):
    field, report = solve_robin_regular_part(voxel_ball, [0, 0, 0], c3, 1e-12, 10_000)
    h = voxel_ball.h

    # the Dirichlet data is -λ/|x| on facet centers with 1 - h/2 <= |x| <= 1 + h/2
    assert report.converged
    assert field.values.max() <= -lam3 / (1.0 + 0.5 * h) + 1e-9
    assert field.values.min() >= -lam3 / (1.0 - 0.5 * h) - 1e-9
