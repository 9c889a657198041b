import numpy as np
import pytest

from src.discrete import (
    DiscreteState,
    Slot,
    deformation_space,
    deformed_polygon,
    legal_moves,
    parallel_jacobian,
    parallel_residuals,
    project_to_parallel,
    rotate_sequence,
    rotation_start,
)
from src.errors import InvalidParameterError, InvalidPolygonError
from src.geometry import Polygon


@pytest.mark.parametrize("n, relabeled, exact", [(1, 4, 12), (2, 7, 21), (4, 13, 39)])
def test_regular_polygon_rotation(n, relabeled, exact):
    report = rotate_sequence(DiscreteState(Polygon.regular(3 * n + 1), rotation_start(n)))
    assert report.relabeled_at == relabeled
    assert report.exact_at == exact
    assert report.completed
    assert not report.stuck


def test_every_move_advances_one_vertex():
    report = rotate_sequence(DiscreteState(Polygon.regular(7), rotation_start(2)))
    assert [move.slot for move in report.moves[:6]] == [Slot.A, Slot.C, Slot.B] * 2
    for move in report.moves:
        assert (move.target - move.source) % 7 == 1


def test_hexagon_triangle_cannot_move():
    state = DiscreteState(Polygon.regular(6), (0, 2, 4))
    assert legal_moves(state) == []
    report = rotate_sequence(state)
    assert report.stuck
    assert report.moves == ()


def test_state_validation(square):
    with pytest.raises(InvalidPolygonError):
        DiscreteState(Polygon.regular(7), (0, 3, 3))
    with pytest.raises(InvalidPolygonError):
        DiscreteState(Polygon(Polygon.regular(7).vertices[::-1]), (0, 3, 5))


def test_state_indices_wrap():
    state = DiscreteState(Polygon.regular(7), (7, 10, 12))
    assert state.triangle == (0, 3, 5)
    assert state.to_json()["triangle"] == [0, 3, 5]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_regular_polygon_satisfies_parallel_conditions(n):
    assert np.max(np.abs(parallel_residuals(Polygon.regular(3 * n + 1), n))) < 1e-14


def test_parallel_conditions_need_3n_plus_1_vertices():
    with pytest.raises(InvalidParameterError):
        parallel_residuals(Polygon.regular(6), 2)


def test_parallel_jacobian_matches_finite_differences(rng):
    polygon = Polygon(Polygon.regular(7).vertices + 0.05 * rng.normal(size=(7, 2)))
    jacobian = parallel_jacobian(polygon, 2)
    h = 1e-6
    flat = polygon.vertices.reshape(-1)
    fd = np.empty_like(jacobian)
    for j in range(flat.size):
        bump = np.zeros_like(flat)
        bump[j] = h
        plus = parallel_residuals(Polygon((flat + bump).reshape(-1, 2)), 2)
        minus = parallel_residuals(Polygon((flat - bump).reshape(-1, 2)), 2)
        fd[:, j] = (plus - minus) / (2.0 * h)
    np.testing.assert_allclose(jacobian, fd, atol=1e-8)


def test_deformation_space_contains_affine_motions():
    space = deformation_space(Polygon.regular(7), 2)
    assert space.affine_count == 6
    assert space.dimension >= 7
    assert space.non_affine is not None


def test_deformation_space_requires_parallel_polygon(rng):
    polygon = Polygon(Polygon.regular(7).vertices + 0.05 * rng.normal(size=(7, 2)))
    with pytest.raises(InvalidParameterError):
        deformation_space(polygon, 2)


def test_projection_restores_parallel_conditions(rng):
    polygon = Polygon(Polygon.regular(7).vertices + 1e-3 * rng.normal(size=(7, 2)))
    projected = project_to_parallel(polygon, 2)
    assert np.max(np.abs(parallel_residuals(projected, 2))) < 1e-11


def test_deformed_polygon_still_rotates():
    regular = Polygon.regular(7)
    deformed = deformed_polygon(regular, 2, step=0.02)
    # 正多角形のアフィン像ではない
    moved = deformed.vertices - deformed.centroid()
    fit, *_ = np.linalg.lstsq(regular.vertices, moved, rcond=None)
    assert np.linalg.norm(regular.vertices @ fit - moved) > 1e-4
    report = rotate_sequence(DiscreteState(deformed, rotation_start(2)))
    assert report.relabeled_at == 7
    assert report.exact_at == 21
