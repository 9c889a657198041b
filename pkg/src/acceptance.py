"""受け入れ検査。各検査は決まった乱数列から標本を作り、合否と測定値を返す。"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import gcd
from typing import Callable

import numpy as np

from src.birkhoff import (
    alphas,
    bracket_growth_report,
    frame_field,
    omega_pair,
    sum_alpha_vs_dA,
)
from src.config import Tolerances
from src.discrete import DiscreteState, deformed_polygon, parallel_residuals, rotate_sequence, rotation_start
from src.errors import GeometricDegeneracyError
from src.geometry import Polygon, PolyTangent, cross, cyclic_shift, hausdorff_distance, is_nondegenerate, triangle_areas2, unit
from src.horizontal import (
    circle_baseline,
    circle_baseline_constant,
    integrate,
    monodromy_shift,
    reconstruct_table,
    shoot,
    verify_periodic_family,
)
from src.periodicity import expr1_residual, identity_example, obstruction_demo, rounded_square_demo
from src.table import SupportFourierTable, mirror_angles, outer_map, outer_map_diff
from src.triangle import build_family, monodromy_residual3, seeded_curve, solve_monodromy3, verify_family
from src.util import Timer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measurements: dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict[str, object]:
        return {"name": self.name, "passed": self.passed, "measurements": self.measurements}


def random_table(rng: np.random.Generator, harmonics: int = 3, amplitude: float = 0.02) -> SupportFourierTable:
    coefficients = rng.uniform(-amplitude, amplitude, size=(harmonics, 2))
    coefficients[0] = rng.uniform(-0.05, 0.05, size=2)
    return SupportFourierTable(1.0, coefficients)


def random_exterior_point(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(1.5, 3.0) * unit(rng.uniform(0.0, 2.0 * np.pi))


def random_polygon(rng: np.random.Generator, n: int) -> Polygon:
    while True:
        polygon = Polygon(rng.normal(size=(n, 2)))
        if is_nondegenerate(polygon, 1e-3):
            return polygon


def finite_difference_jacobian(table, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    columns = []
    for e in np.eye(2):
        columns.append((outer_map(table, x + h * e) - outer_map(table, x - h * e)) / (2.0 * h))
    return np.column_stack(columns)


def check_mirror(rng: np.random.Generator, tables: int = 10, points: int = 10) -> CheckResult:
    worst_diff = 0.0
    worst_mirror = 0.0
    for _ in range(tables):
        table = random_table(rng)
        for _ in range(points):
            x = random_exterior_point(rng)
            diff = outer_map_diff(table, x)
            fd = finite_difference_jacobian(table, x)
            worst_diff = max(worst_diff, float(np.linalg.norm(fd - diff.world) / np.linalg.norm(diff.world)))
            direction = diff.rotation @ unit(rng.uniform(0.3, np.pi - 0.3))
            try:
                angles = mirror_angles(table, x, direction)
            except GeometricDegeneracyError:
                continue
            worst_mirror = max(worst_mirror, abs(angles.residual))
    return CheckResult(
        "mirror",
        worst_diff < 1e-5 and worst_mirror < 1e-8,
        {"differential_relative_error": worst_diff, "mirror_residual": worst_mirror},
    )


def check_area_preservation(rng: np.random.Generator, tables: int = 10, points: int = 10) -> CheckResult:
    worst = 0.0
    for _ in range(tables):
        table = random_table(rng)
        for _ in range(points):
            jacobian = finite_difference_jacobian(table, random_exterior_point(rng))
            worst = max(worst, abs(float(np.linalg.det(jacobian)) - 1.0))
    return CheckResult("area", worst < 1e-6, {"max_det_error": worst})


def check_circle_families(tolerances: Tolerances, max_n: int = 8) -> CheckResult:
    table = SupportFourierTable.circle()
    worst = 0.0
    cases = []
    for n in range(3, max_n + 1):
        for k in range(1, (n + 1) // 2):
            if gcd(n, k) != 1:
                continue
            x = np.array([1.0 / np.cos(k * np.pi / n), 0.0])
            y = x
            for _ in range(n):
                y = outer_map(table, y)
            error = float(np.linalg.norm(y - x))
            worst = max(worst, error)
            cases.append([n, k])
    return CheckResult("circles", worst < tolerances.closure, {"max_closure": worst, "cases": cases})


def check_bracket_growth(rng: np.random.Generator, tolerances: Tolerances, samples: int = 100) -> CheckResult:
    failures = []
    worst_omega = 0.0
    for n in range(3, 9):
        for _ in range(samples):
            polygon = random_polygon(rng, n)
            report = bracket_growth_report(polygon, tol=tolerances.rank)
            if not report.passed:
                failures.append({"n": n, "rank": report.rank})
            a = triangle_areas2(polygon)
            k = int(rng.integers(n))
            expected = -a[(k - 1) % n] * a[k] * a[(k + 1) % n]
            value = omega_pair(k, frame_field(polygon, k - 1), frame_field(polygon, k))
            worst_omega = max(worst_omega, abs(value - expected) / abs(expected))
    return CheckResult(
        "rank",
        not failures and worst_omega < 1e-10,
        {"failures": failures, "omega_relative_error": worst_omega},
    )


def check_form_identities(rng: np.random.Generator, samples: int = 100) -> CheckResult:
    worst_sum = 0.0
    worst_horizontal = 0.0
    for _ in range(samples):
        n = int(rng.integers(3, 9))
        polygon = random_polygon(rng, n)
        scale = polygon.diameter()
        total, derivative = sum_alpha_vs_dA(polygon, PolyTangent(rng.normal(size=(n, 2))))
        worst_sum = max(worst_sum, abs(total + derivative) / scale**3)
        for k in range(n):
            worst_horizontal = max(worst_horizontal, float(np.max(np.abs(alphas(polygon, frame_field(polygon, k))))) / scale**3)
    return CheckResult(
        "forms",
        worst_sum < 1e-12 and worst_horizontal < 1e-12,
        {"sum_alpha_plus_dA": worst_sum, "alpha_of_frame": worst_horizontal},
    )


def check_triangle_construction(rng: np.random.Generator, tolerances: Tolerances, seeds: int = 3) -> CheckResult:
    traced = []
    rows = []
    passed = True
    for index in range(seeds):
        solution = solve_monodromy3(seeded_curve(rng, 0.05), tol=tolerances.monodromy3)
        residual = monodromy_residual3(solution.curve)
        family = build_family(solution.curve, tol=tolerances.monodromy3)
        w = family.vertices
        areas = cross(w[:, 1] - w[:, 0], w[:, 2] - w[:, 0])
        verification = verify_family(family, representation="spline")
        row = {
            "seed_index": index,
            "residual": residual.norm,
            "agreement": residual.agreement,
            "convex": family.convex,
            "area_deviation": float(np.max(np.abs(areas - 3.0))),
            "closure_max": verification.closure_max,
        }
        rows.append(row)
        passed &= (
            residual.norm < tolerances.monodromy3
            and residual.agreement < tolerances.monodromy3
            and family.convex
            and row["area_deviation"] < 1e-10
            and verification.closure_max < 1e-5
        )
        traced.append(family.traced)
    distances = [hausdorff_distance(a, b) for a, b in combinations(traced, 2)]
    passed &= min(distances) > 1e-3
    return CheckResult("construct3", bool(passed), {"families": rows, "min_hausdorff": min(distances)})


def check_shooting(
    rng: np.random.Generator,
    tolerances: Tolerances,
    steps: int = 800,
    cases: tuple[tuple[int, int], ...] = ((5, 1), (5, 2)),
) -> CheckResult:
    rows = []
    passed = True
    for n, k in cases:
        seed = 0.02 * circle_baseline_constant(n, k) * rng.normal(size=(n, 4))
        result = shoot(n, k, seed, steps=steps, tol=tolerances.shoot)
        reconstructed = reconstruct_table(result.path)
        family = verify_periodic_family(reconstructed, result.path, samples=50, representation="spline")
        rows.append(
            {
                "n": n,
                "k": k,
                "iterations": result.iterations,
                "residual": result.residual,
                "convex": reconstructed.convex,
                "closure_max": family.closure_max,
                "area_spread": family.area_spread,
            }
        )
        passed &= (
            result.residual < tolerances.shoot * result.path.start.diameter()
            and reconstructed.convex
            and family.closure_max < 1e-5
            and family.area_spread < 1e-6
        )
    return CheckResult("shoot", bool(passed), {"cases": rows})


def check_identity_example() -> CheckResult:
    example = identity_example()
    expr1 = expr1_residual(example.triangle, 1.0 / np.sqrt(3.0))
    obstruction = obstruction_demo()
    middle = obstruction.residuals.size // 2
    ends = min(abs(obstruction.residuals[0]), abs(obstruction.residuals[-1]))
    passed = (
        example.differential_error < 1e-6
        and abs(expr1.area_form) < 1e-12
        and abs(obstruction.residuals[middle]) < 1e-12
        and ends > 1e-3
    )
    return CheckResult(
        "identity",
        bool(passed),
        {
            "differential_error": example.differential_error,
            "matrix_product_error": example.matrix_product_error,
            "expr1_residual": expr1.area_form,
            "obstruction_at_symmetric": float(obstruction.residuals[middle]),
            "obstruction_at_ends": float(ends),
            "obstruction_derivative": obstruction.derivative,
            "obstruction_even": obstruction.even,
        },
    )


def check_rounded_square(tolerances: Tolerances) -> CheckResult:
    report = rounded_square_demo(tol=tolerances.closure)
    return CheckResult("rounded_square", report.fraction == 1.0, {"fraction": report.fraction})


def check_discrete_rotation(tolerances: Tolerances) -> CheckResult:
    rows = []
    passed = True
    for n in (2, 4):
        k = 3 * n + 1
        host = Polygon.regular(k)
        report = rotate_sequence(DiscreteState(host, rotation_start(n)), tol=tolerances.parallel)
        residual = float(np.max(np.abs(parallel_residuals(host, n)))) / host.diameter() ** 2
        rows.append({"vertices": k, "relabeled_at": report.relabeled_at, "exact_at": report.exact_at, "parallel_residual": residual})
        passed &= report.relabeled_at == k and report.exact_at == 3 * k and residual < 1e-14
    deformed = deformed_polygon(Polygon.regular(7), 2)
    deformed_report = rotate_sequence(DiscreteState(deformed, rotation_start(2)), tol=tolerances.parallel)
    passed &= deformed_report.completed
    return CheckResult("rotation", bool(passed), {"regular": rows, "deformed_completed": deformed_report.completed})


def check_integrator_order(coarse: int = 40, n: int = 5, k: int = 1) -> CheckResult:
    start, controls = circle_baseline(n, k)
    target = cyclic_shift(start, monodromy_shift(n, k)).vertices
    errors = [float(np.linalg.norm(integrate(start, controls, steps).end.vertices - target)) for steps in (coarse, 2 * coarse)]
    ratio = errors[0] / errors[1]
    return CheckResult("integrator", 12.0 <= ratio <= 20.0, {"errors": errors, "ratio": ratio})


SUITES = ("mirror", "area", "circles", "rank", "forms", "construct3", "shoot", "identity", "rounded_square", "rotation", "integrator")


def _checks(rng: np.random.Generator, tolerances: Tolerances, steps: int) -> dict[str, Callable[[], CheckResult]]:
    return {
        "mirror": lambda: check_mirror(rng),
        "area": lambda: check_area_preservation(rng),
        "circles": lambda: check_circle_families(tolerances),
        "rank": lambda: check_bracket_growth(rng, tolerances),
        "forms": lambda: check_form_identities(rng),
        "construct3": lambda: check_triangle_construction(rng, tolerances),
        "shoot": lambda: check_shooting(rng, tolerances, steps),
        "identity": check_identity_example,
        "rounded_square": lambda: check_rounded_square(tolerances),
        "rotation": lambda: check_discrete_rotation(tolerances),
        "integrator": check_integrator_order,
    }


def run_suite(names: list[str], *, seed: int, tolerances: Tolerances, steps: int = 800) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    checks = _checks(rng, tolerances, steps)
    results = []
    for name in names:
        logger.info(f"検査開始: {name}")
        with Timer() as elapsed:
            result = checks[name]()
        result = CheckResult(result.name, result.passed, result.measurements, elapsed())
        logger.info(f"検査{'合格' if result.passed else '不合格'}: {name} ({result.seconds:.2f}秒)")
        results.append(result)
    return results
