from dataclasses import replace

import numpy as np
import pytest

from src.errors import InvalidCurveError, InvalidParameterError, NonConvergenceError, NotClosedError
from src.geometry import area2, cross, rot90, triangle_area2
from src.triangle import (
    EquivariantCurve,
    build_family,
    centroid_drift,
    centroid_velocity,
    circumscribed_orbit,
    integral_identities,
    monodromy_residual3,
    pqr,
    seeded_curve,
    solve_monodromy3,
    table_area_ratio,
    verify_family,
)

CIRCLE_SCALE = (2.0 / np.sqrt(3.0)) ** 0.5


@pytest.fixture
def solved_curve(rng) -> EquivariantCurve:
    return solve_monodromy3(seeded_curve(rng, 0.05)).curve


@pytest.mark.parametrize("terms", [{1: 1.0, 3: 0.1}, {1: 1.0, -9: 0.01}, {-1: 1.0}])
def test_invalid_curves_are_rejected(terms):
    with pytest.raises(InvalidCurveError):
        EquivariantCurve.from_terms(terms)


def test_duplicate_frequencies_are_rejected():
    with pytest.raises(InvalidCurveError):
        EquivariantCurve((1, 1), np.array([1.0, 0.1]))


def test_curve_values_are_in_sl2():
    curve = EquivariantCurve.from_terms({1: 1.0, -2: 0.1 + 0.05j, 4: 0.02})
    sample = curve.sample(np.linspace(0.0, 2.0 * np.pi, 37))
    np.testing.assert_allclose(cross(sample.u, sample.v), 1.0, atol=1e-13)


def test_circle_invariants():
    p, q, r = pqr(EquivariantCurve.circle(), 0.3)
    assert p == pytest.approx(2.0 / np.sqrt(3.0))
    assert q == pytest.approx(2.0 / np.sqrt(3.0))
    assert r == pytest.approx(1.0 / np.sqrt(3.0))


def test_circle_satisfies_monodromy():
    residual = monodromy_residual3(EquivariantCurve.circle())
    assert residual.norm < 1e-12
    assert residual.agreement < 1e-12


def test_mon2_is_three_times_mon3(rng):
    curve = seeded_curve(rng, 0.08)
    residual = monodromy_residual3(curve)
    assert residual.norm > 1e-6
    assert residual.agreement < 1e-10
    np.testing.assert_allclose(centroid_drift(curve), residual.mon3, atol=1e-10)


def test_integral_identities_hold(rng):
    errors = integral_identities(seeded_curve(rng, 0.1))
    assert set(errors) == {"qu+rv", "pv+ru", "qv-pu", "pu-ru-rv"}
    assert max(errors.values()) < 1e-10


def test_solver_closes_the_centroid(solved_curve):
    assert monodromy_residual3(solved_curve).norm < 1e-10
    assert np.linalg.norm(centroid_drift(solved_curve)) < 1e-9


def test_solver_rejects_frequency_three(rng):
    with pytest.raises(InvalidCurveError):
        solve_monodromy3(seeded_curve(rng), ((3, "re"), (2, "im")))


def test_unsolved_curve_does_not_build(rng):
    with pytest.raises(NotClosedError) as info:
        build_family(seeded_curve(rng, 0.05))
    assert info.value.residual > 1e-10


def test_circle_family():
    family = build_family(EquivariantCurve.circle(), points=256)
    assert family.convex
    np.testing.assert_allclose(np.linalg.norm(family.traced, axis=1), CIRCLE_SCALE, atol=1e-12)
    assert table_area_ratio(family) == pytest.approx(3.0 * np.sqrt(3.0) / (4.0 * np.pi), rel=1e-10)


def test_inscribed_triangles_have_constant_area(solved_curve):
    family = build_family(solved_curve, points=1024)
    assert family.convex
    for index in (0, 100, 555):
        assert area2(family.triangle(index)) == pytest.approx(3.0, abs=1e-10)
        assert triangle_area2(family.triangle(index), 1) == pytest.approx(3.0, abs=1e-10)


def test_circumscribed_orbit_touches_at_midpoints(solved_curve):
    family = build_family(solved_curve, points=1024)
    orbit = circumscribed_orbit(family, 321)
    z = orbit.vertices
    midpoints = 0.5 * (z + np.roll(z, -1, axis=0))
    np.testing.assert_allclose(midpoints, family.vertices[321], atol=1e-9)


def test_circle_family_verification():
    report = verify_family(build_family(EquivariantCurve.circle(), points=512), 6)
    assert report.closure_max < 1e-8
    assert report.area_spread < 1e-12


@pytest.mark.slow
def test_solved_family_is_a_family_of_three_periodic_points(solved_curve):
    report = verify_family(build_family(solved_curve), 12, representation="spline")
    assert report.closure_max < 1e-5
    assert report.midpoint_max < 1e-9
    assert report.area_spread < 1e-10


def test_curve_to_json():
    curve = EquivariantCurve.from_terms({1: 1.0, -2: 0.1 - 0.2j})
    assert curve.to_json() == {
        "max_frequency": 8,
        "terms": [{"m": -2, "re": 0.1, "im": -0.2}, {"m": 1, "re": 1.0, "im": 0.0}],
    }


def test_shifted_invariants_follow_the_cyclic_action(rng):
    curve = seeded_curve(rng, 0.1)
    third = 2.0 * np.pi / 3.0
    for t in (0.0, 0.7, 2.9):
        p, q, r = pqr(curve, t)
        shifted = pqr(curve, t + third)
        np.testing.assert_allclose(shifted, (q, p + q - 2.0 * r, q - r), atol=1e-12)


def test_scale_and_centroid_velocity_have_period_one_third(rng):
    curve = seeded_curve(rng, 0.1)
    t = np.linspace(0.0, 2.0 * np.pi, 17)
    here, there = curve.sample(t), curve.sample(t + 2.0 * np.pi / 3.0)
    np.testing.assert_allclose(there.scale, here.scale, atol=1e-12)
    np.testing.assert_allclose(there.centroid_velocity(), here.centroid_velocity(), atol=1e-12)
    np.testing.assert_allclose(centroid_velocity(curve, 1.1 + 2.0 * np.pi / 3.0), centroid_velocity(curve, 1.1), atol=1e-12)


def test_circumscribed_orbit_rejects_a_non_convex_family():
    family = build_family(EquivariantCurve.circle(), points=64)
    with pytest.raises(InvalidParameterError):
        circumscribed_orbit(replace(family, convex=False), 0)


def test_circumscribed_orbit_checks_midpoints():
    family = build_family(EquivariantCurve.circle(), points=64)
    tangents = family.tangents.copy()
    # 1本の接線を傾けると中点がずれる
    tangents[5, 0] = tangents[5, 0] + 0.1 * rot90(tangents[5, 0])
    with pytest.raises(NonConvergenceError):
        circumscribed_orbit(replace(family, tangents=tangents), 5)
    circumscribed_orbit(family, 5)
