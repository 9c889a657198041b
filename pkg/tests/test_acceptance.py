import numpy as np
import pytest

from src.acceptance import (
    SUITES,
    check_area_preservation,
    check_bracket_growth,
    check_circle_families,
    check_discrete_rotation,
    check_form_identities,
    check_identity_example,
    check_integrator_order,
    check_mirror,
    check_rounded_square,
    check_shooting,
    check_triangle_construction,
    random_table,
    run_suite,
)
from src.config import Tolerances
from src.table import curvature_radius


def test_random_tables_are_convex(rng):
    for _ in range(20):
        table = random_table(rng)
        assert min(curvature_radius(table, t) for t in np.linspace(0.0, 2.0 * np.pi, 64)) > 0.0


def test_mirror_and_area_checks(rng):
    assert check_mirror(rng, tables=3, points=5).passed
    assert check_area_preservation(rng, tables=3, points=5).passed


def test_circle_family_check():
    result = check_circle_families(Tolerances())
    assert result.passed
    assert [5, 2] in result.measurements["cases"]


def test_rank_and_form_checks(rng):
    assert check_bracket_growth(rng, Tolerances(), samples=3).passed
    assert check_form_identities(rng, samples=10).passed


def test_identity_and_rounded_square_checks():
    assert check_identity_example().passed
    assert check_rounded_square(Tolerances()).passed


def test_rotation_check():
    result = check_discrete_rotation(Tolerances())
    assert result.passed
    assert [row["exact_at"] for row in result.measurements["regular"]] == [21, 39]


def test_integrator_check():
    result = check_integrator_order()
    assert result.passed
    assert 12.0 <= result.measurements["ratio"] <= 20.0


def test_results_exclude_timing():
    result = run_suite(["identity"], seed=3, tolerances=Tolerances())[0]
    assert result.seconds > 0.0
    assert set(result.to_json()) == {"name", "passed", "measurements"}


def test_suite_is_reproducible():
    first = run_suite(["mirror", "forms"], seed=5, tolerances=Tolerances())
    second = run_suite(["mirror", "forms"], seed=5, tolerances=Tolerances())
    assert [r.to_json() for r in first] == [r.to_json() for r in second]


def test_suite_names():
    assert "construct3" in SUITES
    assert len(set(SUITES)) == len(SUITES)


@pytest.mark.slow
def test_triangle_construction_check(rng):
    result = check_triangle_construction(rng, Tolerances())
    assert result.passed
    assert result.measurements["min_hausdorff"] > 1e-3


@pytest.mark.slow
def test_shooting_check(rng):
    assert check_shooting(rng, Tolerances(), steps=400, cases=((5, 1),)).passed
