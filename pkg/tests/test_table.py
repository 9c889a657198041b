import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import FitFailureError, InvalidTableError, OutsideDomainError, SingularLineError
from src.geometry import cross, rot90, unit
from src.table import (
    AffineTable,
    Arc,
    PiecewiseArcsTable,
    SupportFourierTable,
    SupportSamples,
    boundary_point,
    curvature_radius,
    ellipse,
    fit_support_fourier,
    left_tangency,
    mirror_angles,
    outer_map,
    outer_map_diff,
    outer_map_inverse,
    right_tangency,
    sample_boundary,
    spline_support_table,
    table_area,
)


def fd_jacobian(table, x, h=1e-6):
    return np.column_stack(
        [(outer_map(table, x + h * e) - outer_map(table, x - h * e)) / (2.0 * h) for e in np.eye(2)]
    )


def stadium() -> PiecewiseArcsTable:
    # 半径1の半円2つを長さ2の線分でつないだ競技場形
    half = np.pi / 2.0
    return PiecewiseArcsTable(
        (
            Arc(np.array([1.0, 0.0]), 1.0, -half, half),
            Arc(np.array([-1.0, 0.0]), 1.0, half, 3.0 * half),
        )
    )


def test_circle_map_is_counterclockwise(unit_circle):
    frame = right_tangency(unit_circle, [2.0, 0.0])
    np.testing.assert_allclose(frame.point, [0.5, np.sqrt(3.0) / 2.0], atol=1e-13)
    np.testing.assert_allclose(outer_map(unit_circle, [2.0, 0.0]), [-1.0, np.sqrt(3.0)], atol=1e-12)
    assert frame.rho == pytest.approx(1.0)


def test_left_tangency_mirrors_right(unit_circle):
    frame = left_tangency(unit_circle, [2.0, 0.0])
    np.testing.assert_allclose(frame.point, [0.5, -np.sqrt(3.0) / 2.0], atol=1e-13)


def test_tangency_root_is_accurate(wavy_table):
    x = np.array([1.7, -0.9])
    frame = right_tangency(wavy_table, x)
    assert abs(cross(frame.point - x, frame.unit_tangent)) < 1e-12 * wavy_table.scale**2
    # テーブルは x → T(x) の左側
    assert cross(outer_map(wavy_table, x) - x, -x) > 0.0


@pytest.mark.parametrize("n, k", [(3, 1), (4, 1), (5, 1), (5, 2), (7, 2), (7, 3), (8, 3)])
def test_circle_periodic_families(unit_circle, n, k):
    x = np.array([1.0 / np.cos(k * np.pi / n), 0.0])
    y = x
    for _ in range(n):
        y = outer_map(unit_circle, y)
    assert np.linalg.norm(y - x) < 1e-9


@pytest.mark.parametrize("quarter", range(4))
def test_tangency_on_grid_node(unit_circle, quarter):
    # 接点の角度 (2q+1)π/4 がちょうど探索格子上に乗る
    x = np.sqrt(2.0) * unit(quarter * np.pi / 2.0)
    right = right_tangency(unit_circle, x)
    left = left_tangency(unit_circle, x)
    np.testing.assert_allclose(right.theta, np.mod((2 * quarter + 1) * np.pi / 4.0, 2.0 * np.pi), atol=1e-12)
    np.testing.assert_allclose(left.theta, np.mod((2 * quarter - 1) * np.pi / 4.0, 2.0 * np.pi), atol=1e-12)
    np.testing.assert_allclose(outer_map(unit_circle, x), np.sqrt(2.0) * unit((quarter + 1) * np.pi / 2.0), atol=1e-12)


def test_circle_square_orbit_from_axis(unit_circle):
    x = np.array([np.sqrt(2.0), 0.0])
    orbit = [x]
    for _ in range(4):
        orbit.append(outer_map(unit_circle, orbit[-1]))
    np.testing.assert_allclose(orbit[2], [-np.sqrt(2.0), 0.0], atol=1e-12)
    assert np.linalg.norm(orbit[4] - x) < 1e-9


@given(st.floats(0.0, 2.0 * np.pi), st.floats(1.3, 4.0))
@settings(max_examples=40, deadline=None)
def test_inverse_undoes_map(angle, distance):
    table = SupportFourierTable(1.0, np.array([[0.02, -0.01], [0.03, 0.0], [0.0, 0.01]]))
    x = distance * unit(angle)
    np.testing.assert_allclose(outer_map_inverse(table, outer_map(table, x)), x, atol=1e-10)


def test_differential_matches_finite_differences(wavy_table, rng):
    for _ in range(10):
        x = rng.uniform(1.5, 3.0) * unit(rng.uniform(0.0, 2.0 * np.pi))
        diff = outer_map_diff(wavy_table, x)
        fd = fd_jacobian(wavy_table, x)
        assert np.linalg.norm(fd - diff.world) / np.linalg.norm(diff.world) < 1e-5
        assert np.linalg.det(fd) == pytest.approx(1.0, abs=1e-6)
        assert np.linalg.det(diff.world) == pytest.approx(1.0, abs=1e-12)


def test_segment_frame_form(wavy_table):
    diff = outer_map_diff(wavy_table, [2.0, 0.5])
    rotation = diff.rotation
    np.testing.assert_allclose(rotation.T @ diff.world @ rotation, diff.segment, atol=1e-12)
    assert diff.segment[0, 1] == pytest.approx(-2.0 * diff.frame.rho / diff.r)


def test_mirror_equation(wavy_table, rng):
    for _ in range(20):
        x = rng.uniform(1.5, 3.0) * unit(rng.uniform(0.0, 2.0 * np.pi))
        rotation = outer_map_diff(wavy_table, x).rotation
        angles = mirror_angles(wavy_table, x, rotation @ unit(rng.uniform(0.3, np.pi - 0.3)))
        assert abs(angles.residual) < 1e-8
        assert 0.0 < angles.alpha < np.pi and 0.0 < angles.beta < np.pi


def test_interior_point_is_outside_domain(wavy_table):
    with pytest.raises(OutsideDomainError):
        outer_map(wavy_table, [0.1, 0.2])


def test_negative_curvature_is_rejected():
    with pytest.raises(InvalidTableError):
        SupportFourierTable(1.0, np.array([[0.0, 0.0], [0.5, 0.0]]))


def test_non_finite_coefficients_are_rejected():
    with pytest.raises(InvalidTableError):
        SupportFourierTable(1.0, np.array([[np.inf, 0.0]]))


def test_boundary_and_curvature_of_circle(unit_circle):
    np.testing.assert_allclose(boundary_point(unit_circle, np.pi / 2.0), [0.0, 1.0], atol=1e-15)
    assert curvature_radius(unit_circle, 1.234) == pytest.approx(1.0)
    assert table_area(unit_circle) == pytest.approx(np.pi, rel=1e-5)


def test_translated_circle(unit_circle):
    moved = unit_circle.translated([0.5, -0.25])
    assert isinstance(moved, SupportFourierTable)
    np.testing.assert_allclose(moved.boundary_point(0.0), [1.5, -0.25], atol=1e-15)


@pytest.mark.parametrize("transform", ["rotated", "scaled", "translated"])
def test_map_commutes_with_similarities(wavy_table, transform):
    angle, factor, offset = 0.7, 1.8, np.array([0.3, -0.2])
    if transform == "rotated":
        image = wavy_table.rotated(angle)
        c, s = np.cos(angle), np.sin(angle)
        g = lambda p: np.array([[c, -s], [s, c]]) @ p
    elif transform == "scaled":
        image = wavy_table.scaled(factor)
        g = lambda p: factor * p
    else:
        image = wavy_table.translated(offset)
        g = lambda p: p + offset
    x = np.array([2.1, 0.4])
    np.testing.assert_allclose(g(outer_map(wavy_table, x)), outer_map(image, g(x)), atol=1e-10)


def test_exact_rotation_agrees_with_affine(wavy_table):
    exact = wavy_table.rotated(0.4)
    generic = AffineTable(wavy_table, [[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]])
    for theta in np.linspace(0.0, 6.0, 7):
        np.testing.assert_allclose(exact.boundary_point(theta), generic.boundary_point(theta), atol=1e-12)
        assert exact.curvature_radius(theta) == pytest.approx(generic.curvature_radius(theta))


def test_ellipse_is_affine_image_of_circle(unit_circle):
    table = ellipse(2.0, 1.0)
    matrix = np.diag([2.0, 1.0])
    x = np.array([1.5, 1.2])
    np.testing.assert_allclose(outer_map(table, matrix @ x), matrix @ outer_map(unit_circle, x), atol=1e-12)
    assert table.curvature_radius(0.0) == pytest.approx(0.5)
    assert table.curvature_radius(np.pi / 2.0) == pytest.approx(4.0)


def test_nested_affine_tables_collapse():
    table = ellipse(2.0, 1.0).translated([1.0, 0.0])
    assert isinstance(table, AffineTable)
    assert not isinstance(table.base, AffineTable)


def test_affine_map_must_preserve_orientation(unit_circle):
    with pytest.raises(InvalidTableError):
        AffineTable(unit_circle, np.diag([1.0, -1.0]))


def test_rounded_square_corner_orbit():
    table = PiecewiseArcsTable.rounded_square(1.0, 5.0)
    y = np.array([0.0, -2.0])
    corners = []
    for _ in range(4):
        frame = right_tangency(table, y)
        assert frame.rho == 0.0
        corners.append(frame.point)
        y = outer_map(table, y)
    np.testing.assert_allclose(y, [0.0, -2.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(corners), 1.0, atol=1e-12)


def test_rounded_square_needs_large_side_radius():
    with pytest.raises(InvalidTableError):
        PiecewiseArcsTable.rounded_square(1.0, 0.5)


def test_piecewise_arcs_must_turn_once():
    with pytest.raises(InvalidTableError):
        PiecewiseArcsTable((Arc(np.zeros(2), 1.0, 0.0, 1.0), Arc(np.zeros(2), 1.0, 1.0, 2.0)))


def test_segment_line_is_singular():
    with pytest.raises(SingularLineError):
        outer_map(stadium(), [3.0, 1.0])


def test_stadium_map_off_the_segment_lines():
    table = stadium()
    x = np.array([3.0, 2.0])
    y = outer_map(table, x)
    np.testing.assert_allclose(outer_map_inverse(table, y), x, atol=1e-12)


def test_fourier_fit_recovers_coefficients(wavy_table):
    thetas = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
    points = np.array([wavy_table.boundary_point(t) for t in thetas])
    samples = SupportSamples.from_tangent_lines(points, rot90(unit(thetas)))
    fitted = fit_support_fourier(samples, 8)
    assert fitted.h0 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(fitted.coefficients[:3], wavy_table.coefficients, atol=1e-12)


def test_fourier_fit_reports_failure(wavy_table):
    points = sample_boundary(wavy_table, 64)
    with pytest.raises(FitFailureError) as info:
        fit_support_fourier(SupportSamples.from_polyline(points), 1, tol=1e-6)
    assert info.value.residual > 1e-3


def test_spline_table_tracks_smooth_table(wavy_table):
    thetas = np.linspace(0.0, 2.0 * np.pi, 512, endpoint=False)
    points = np.array([wavy_table.boundary_point(t) for t in thetas])
    table = spline_support_table(SupportSamples.from_tangent_lines(points, rot90(unit(thetas))))
    x = np.array([1.9, -1.1])
    np.testing.assert_allclose(outer_map(table, x), outer_map(wavy_table, x), atol=1e-7)
