"""
Tests for dimensional constants, charge validation and voxel domains.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from robinkit.errors import (
    ChargeBalanceError,
    DimensionUnsupportedError,
    DuplicatePointError,
    GeometryError,
    PointOutsideDomainError,
)
from robinkit.geometry import (
    VoxelDomain,
    ball_inside,
    ball_touches_boundary,
    balls_overlap,
    boundary_distance,
    lattice_for,
    make_constants,
    validate_charge_config,
    voxelize,
    voxelize_ball,
)
from robinkit.models import BallSpec, CapSelection, ChargeConfig, GammaKind, HalfSpaceClip


def test_constants_in_three_dimensions():
    c = make_constants(3)

    assert c.omega == pytest.approx(4.0 * math.pi, rel=1e-12)
    assert c.lam == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-12)


def test_constants_in_higher_dimensions():
    c4 = make_constants(4)
    c5 = make_constants(5)

    assert c4.omega == pytest.approx(2.0 * math.pi ** 2, rel=1e-12)
    assert c4.lam == pytest.approx(1.0 / (4.0 * math.pi ** 2), rel=1e-12)
    assert c5.omega == pytest.approx(8.0 * math.pi ** 2 / 3.0, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_low_dimensions_are_rejected(n):
    with pytest.raises(DimensionUnsupportedError):
        make_constants(n)


def test_charge_config_requires_matching_lengths():
    with pytest.raises(ValidationError):
        ChargeConfig(points=[[0.1, 0, 0], [0.2, 0, 0]], weights=[1.0])


def test_duplicate_points_are_rejected(make_ball, make_charges):
    cfg = make_charges([[0.1, 0, 0], [0.1, 0, 0]], [1.0, 1.0])

    with pytest.raises(DuplicatePointError):
        validate_charge_config(cfg, make_ball([0, 0, 0], 1.0))


def test_boundary_points_are_not_interior(make_ball, make_charges):
    cfg = make_charges([[1.0, 0, 0]], [1.0])

    with pytest.raises(PointOutsideDomainError):
        validate_charge_config(cfg, make_ball([0, 0, 0], 1.0))


def test_free_boundary_requires_balanced_weights(make_ball, make_charges):
    ball = make_ball([0, 0, 0], 1.0, gamma=GammaKind.NONE)

    with pytest.raises(ChargeBalanceError):
        validate_charge_config(make_charges([[0.2, 0, 0], [-0.2, 0, 0]], [1.0, -0.5]), ball)
    assert validate_charge_config(make_charges([[0.2, 0, 0], [-0.2, 0, 0]], [1.0, -1.0]), ball)


def test_validation_is_idempotent(make_ball, make_charges):
    ball = make_ball([0, 0, 0], 1.0, gamma=GammaKind.NONE)
    cfg = make_charges([[0.2, 0, 0], [-0.2, 0.1, 0]], [1.0, -1.0])

    once = validate_charge_config(cfg, ball)
    twice = validate_charge_config(once, ball)

    assert once is cfg
    assert twice == once


def test_dimension_mismatch_is_rejected(make_ball, make_charges):
    cfg = make_charges([[0.1, 0, 0, 0]], [1.0])

    with pytest.raises(Exception) as excinfo:
        validate_charge_config(cfg, make_ball([0, 0, 0], 1.0))
    assert "dimension" in str(excinfo.value)


def test_ball_relations():
    a = BallSpec(center=[0.5, 0, 0], radius=0.5)
    b = BallSpec(center=[-0.5, 0, 0], radius=0.5)
    unit = BallSpec(center=[0, 0, 0], radius=1.0)

    assert not balls_overlap(a, b)
    assert balls_overlap(a, BallSpec(center=[0.2, 0, 0], radius=0.5))
    assert ball_inside(a, unit)
    assert ball_touches_boundary(a, unit)
    assert not ball_touches_boundary(BallSpec(center=[0, 0, 0], radius=0.5), unit)


def test_lattice_puts_center_on_a_cell_center():
    ball = BallSpec(center=[0.1, -0.2, 0.3], radius=1.0)
    origin, shape = lattice_for(ball, 0.125)

    offsets = (ball.center_vector() - origin) / 0.125 - 0.5
    assert np.allclose(offsets, np.round(offsets))
    assert shape[0] == shape[1] == shape[2]
    assert origin[0] + shape[0] * 0.125 > 1.1


def test_voxelized_ball_is_labelled_dirichlet(voxel_ball):
    assert voxel_ball.n == 3
    assert not voxel_ball.gamma_empty
    assert np.array_equal(voxel_ball.dirichlet, voxel_ball.facets)
    volume = voxel_ball.cell_count * voxel_ball.h ** 3
    assert volume == pytest.approx(4.0 * math.pi / 3.0, rel=0.05)


def test_voxelized_ball_is_symmetric(voxel_ball):
    occupancy = voxel_ball.occupancy

    for axis in range(3):
        assert np.array_equal(occupancy, np.flip(occupancy, axis=axis))
    assert np.array_equal(occupancy, occupancy.transpose(1, 0, 2))
    assert voxel_ball.cell_count == pytest.approx(4.0 * math.pi / 3.0 / voxel_ball.h ** 3, rel=0.1)


def test_voxelized_free_ball_has_no_gamma():
    domain = voxelize_ball(BallSpec(center=[0, 0, 0], radius=1.0), 0.125, gamma=GammaKind.NONE)

    assert domain.gamma_empty
    assert domain.facet_area_total() > 4.0 * math.pi


def test_cap_selection_labels_upper_hemisphere():
    cap = CapSelection(cap_normal=[0, 0, 1], cap_offset=0.0)
    domain = voxelize_ball(BallSpec(center=[0, 0, 0], radius=1.0), 0.125, gamma=cap)

    top = domain.dirichlet[5].sum()
    bottom = domain.dirichlet[4].sum()
    assert top > 0
    assert bottom == 0
    assert 0 < domain.dirichlet.sum() < domain.facets.sum()


def test_clipped_ball_keeps_lower_half_with_flat_neumann_face(make_ball):
    doc = make_ball([0, 0, 0], 1.0, clip=HalfSpaceClip(normal=[0, 0, 1], offset=0.0), h=0.125)
    domain = voxelize(doc)

    centers = domain.cell_centers()
    assert np.all(centers[:, 2] < 0)
    # upward facets lie on the flat face or on the lower sphere; the flat ones are free
    assert domain.neumann[5].sum() > 0
    assert domain.dirichlet.sum() > 0


def test_voxelize_requires_fine_spacing():
    with pytest.raises(GeometryError):
        voxelize_ball(BallSpec(center=[0, 0, 0], radius=1.0), 0.3)


def test_voxel_domain_rejects_disconnected_masks():
    occupancy = np.zeros((5, 5, 5), dtype=bool)
    occupancy[0, 0, 0] = True
    occupancy[4, 4, 4] = True

    with pytest.raises(GeometryError):
        VoxelDomain(origin=np.zeros(3), h=0.1, occupancy=occupancy, dirichlet=np.zeros((6, 5, 5, 5), dtype=bool))


def test_voxel_domain_rejects_interior_labels(voxel_box):
    dirichlet = np.zeros((6, 6, 6, 6), dtype=bool)
    dirichlet[0, 3, 3, 3] = True

    with pytest.raises(GeometryError):
        VoxelDomain(origin=np.zeros(3), h=0.25, occupancy=voxel_box.occupancy, dirichlet=dirichlet)


def test_voxel_membership_and_distance(voxel_box):
    assert voxel_box.contains([0.75, 0.75, 0.75])
    assert not voxel_box.contains([1.6, 0.75, 0.75])
    assert boundary_distance(voxel_box, [0.75, 0.75, 0.75]) == pytest.approx(0.625)
    assert voxel_box.facet_area_total() == pytest.approx(6 * 36 * 0.0625)
