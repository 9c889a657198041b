from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from src.errors import DegeneratePolygonError, InvalidPolygonError, NonConvergenceError, OuterBilliardError
from src.geometry import Polygon, area2, cross, rot90, unit
from src.horizontal import monodromy_shift
from src.table import (
    ConvexTable,
    PiecewiseArcsTable,
    SupportFourierTable,
    outer_map,
    outer_map_diff,
    right_tangency,
    sample_boundary,
)
from src.util import IterationEvent, Timer, on_solver_iteration

logger = logging.getLogger(__name__)

# Newton の1歩はテーブル直径の TRUST_RADIUS 倍まで
TRUST_RADIUS = 0.25
ESCAPE_FACTOR = 4.0


@dataclass(frozen=True)
class OrbitReport:
    points: NDArray[np.float64] = field(repr=False)
    n: int
    k: int
    closure_error: float
    circumscribed_area2: float
    method: str = "newton"

    def to_json(self) -> dict[str, object]:
        return {
            "points": self.points.tolist(),
            "n": self.n,
            "k": self.k,
            "closure_error": self.closure_error,
            "circumscribed_area2": self.circumscribed_area2,
            "method": self.method,
        }


def iterate_orbit(table: ConvexTable, x: ArrayLike, steps: int) -> NDArray[np.float64]:
    points = [np.asarray(x, dtype=float)]
    for _ in range(steps):
        points.append(outer_map(table, points[-1]))
    return np.array(points)


def compose_maps(tables: Sequence[ConvexTable], x: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """tables の順に外部ビリヤード写像を適用し、像と合成写像の微分 (世界座標) を返す。"""
    y = np.asarray(x, dtype=float)
    jacobian = np.eye(2)
    for table in tables:
        diff = outer_map_diff(table, y)
        jacobian = diff.world @ jacobian
        y = 2.0 * diff.frame.point - y
    return y, jacobian


def rotation_number(table: ConvexTable, points: NDArray[np.float64]) -> int:
    # 軌道がテーブルの周りを回る回数 (重心まわりの偏角の総和)
    center = sample_boundary(table, 256).mean(axis=0)
    rel = points - center
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    steps = np.mod(np.diff(angles) + np.pi, 2.0 * np.pi) - np.pi
    return int(round(float(np.sum(steps)) / (2.0 * np.pi)))


def _support_line(table: ConvexTable, theta: float) -> tuple[NDArray[np.float64], float]:
    normal = unit(theta)
    return normal, float(table.boundary_point(theta) @ normal)


def circumscribed_polygon(table: ConvexTable, thetas: ArrayLike) -> NDArray[np.float64]:
    # 頂点 i は θ_{i-1} と θ_i の支持線の交点
    thetas = np.asarray(thetas, dtype=float)
    vertices = []
    for previous, current in zip(np.roll(thetas, 1), thetas):
        n0, h0 = _support_line(table, float(previous))
        n1, h1 = _support_line(table, float(current))
        vertices.append(np.linalg.solve(np.array([n0, n1]), np.array([h0, h1])))
    return np.array(vertices)


def _area_extremal_seed(table: ConvexTable, n: int, k: int, seed: NDArray[np.float64]) -> NDArray[np.float64]:
    theta0 = right_tangency(table, seed).theta
    start = theta0 + 2.0 * np.pi * k * np.arange(n) / n

    def objective(thetas: NDArray[np.float64]) -> float:
        try:
            return area2(Polygon(circumscribed_polygon(table, thetas)))
        except (np.linalg.LinAlgError, OuterBilliardError):
            return float("inf")

    result = minimize(objective, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return circumscribed_polygon(table, result.x)[0]


def _newton_periodic(
    table: ConvexTable, n: int, k: int, x: NDArray[np.float64], tol: float, max_iter: int
) -> tuple[NDArray[np.float64], list[float]]:
    scale = table.scale
    center = sample_boundary(table, 256).mean(axis=0)
    reach = max(ESCAPE_FACTOR * scale, ESCAPE_FACTOR * float(np.linalg.norm(x - center)))
    history: list[float] = []
    for iteration in range(max_iter + 1):
        y, jacobian = compose_maps([table] * n, x)
        residual = y - x
        norm = float(np.linalg.norm(residual))
        history.append(norm)
        on_solver_iteration.notify(IterationEvent("periodic", iteration, norm))
        if norm < tol:
            break
        # 円のように周期点が曲線をなすとき J - I は特異なので最小ノルム解をとる
        step, *_ = np.linalg.lstsq(jacobian - np.eye(2), -residual, rcond=1e-10)
        length = float(np.linalg.norm(step))
        if length > TRUST_RADIUS * scale:
            step *= TRUST_RADIUS * scale / length
        x = x + step
        if np.linalg.norm(x - center) > reach:
            raise NonConvergenceError(f"Newton 反復がテーブルから離れすぎました: |x|={np.linalg.norm(x - center):.3e}", history)
    if history[-1] >= tol:
        raise NonConvergenceError(f"{n} 周期点が見つかりませんでした: 残差={history[-1]:.3e}", history)
    points = iterate_orbit(table, x, n)
    measured = rotation_number(table, points)
    if measured != k:
        raise NonConvergenceError(f"回転数が一致しません: 期待={k}, 実際={measured}", history)
    return points, history


def find_periodic(
    table: ConvexTable,
    n: int,
    k: int,
    seed: ArrayLike,
    *,
    tol: float = 1e-9,
    max_iter: int = 50,
) -> OrbitReport:
    monodromy_shift(n, k)
    seed = np.asarray(seed, dtype=float)
    scale = table.scale
    method = "newton"
    with Timer() as elapsed:
        try:
            points, history = _newton_periodic(table, n, k, seed, tol * scale, max_iter)
        except OuterBilliardError as e:
            logger.warning(f"Newton 法が失敗したため面積の極値から探索します: {e}")
            method = "area-extremal"
            start = _area_extremal_seed(table, n, k, seed)
            points, history = _newton_periodic(table, n, k, start, tol * scale, max_iter)
    report = OrbitReport(
        points=points[:-1],
        n=n,
        k=k,
        closure_error=float(np.linalg.norm(points[-1] - points[0])),
        circumscribed_area2=area2(Polygon(points[:-1])),
        method=method,
    )
    logger.info(f"{n} 周期点 (k={k}) を求めました: 閉合誤差={report.closure_error:.3e}, {elapsed():.2f}秒")
    return report


@dataclass(frozen=True)
class Expr1Residual:
    area_form: float
    cot_form: float
    area: float
    r: float

    @property
    def consistency(self) -> float:
        # A ρ - 2 r^3 = -A r (cot α_1 + cot α_3 - ρ/r)
        return self.area_form + self.area * self.r * self.cot_form


def _angle(at: NDArray[np.float64], a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    u, v = a - at, b - at
    return float(np.arctan2(abs(cross(u, v)), float(u @ v)))


def expr1_residual(triangle: Polygon, rho: float, opposite: int = 1) -> Expr1Residual:
    """反射辺 (頂点 opposite の対辺) の曲率半径 ρ に対する A ρ - 2 r^3 と cot α_1 + cot α_3 - ρ/r。"""
    if triangle.n != 3:
        raise InvalidPolygonError(f"三角形が必要です: 頂点数={triangle.n}")
    z = triangle.vertices
    apex, first, last = z[opposite % 3], z[(opposite + 1) % 3], z[(opposite - 1) % 3]
    area = 0.5 * abs(float(cross(first - apex, last - apex)))
    if area <= 1e-14 * triangle.diameter() ** 2:
        raise DegeneratePolygonError("三角形が退化しています")
    r = 0.5 * float(np.linalg.norm(last - first))
    alpha_first = _angle(first, last, apex)
    alpha_last = _angle(last, first, apex)
    return Expr1Residual(
        area_form=area * rho - 2.0 * r**3,
        cot_form=1.0 / np.tan(alpha_first) + 1.0 / np.tan(alpha_last) - rho / r,
        area=area,
        r=r,
    )


def mirror_matrix(rho: float, r: float) -> NDArray[np.float64]:
    return np.array([[-1.0, -2.0 * rho / r], [0.0, -1.0]])


def turn_matrix(alpha: float) -> NDArray[np.float64]:
    # 角 π - α の回転
    return np.array([[-np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), -np.cos(alpha)]])


def matrix_identity_product(alphas: Sequence[float], rhos: Sequence[float], rs: Sequence[float]) -> NDArray[np.float64]:
    # B_1 A_2 B_3 A_1 B_2 A_3
    a = [mirror_matrix(rho, r) for rho, r in zip(rhos, rs)]
    b = [turn_matrix(alpha) for alpha in alphas]
    return b[0] @ a[1] @ b[2] @ a[0] @ b[1] @ a[2]


def clockwise_unit_triangle() -> Polygon:
    return Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, -np.sqrt(3.0) / 2.0]]))


def tangent_circle(a: NDArray[np.float64], b: NDArray[np.float64], radius: float) -> SupportFourierTable:
    # 線分 ab の中点で接し、a→b の左側にある円
    d = (b - a) / np.linalg.norm(b - a)
    center = 0.5 * (a + b) + radius * rot90(d)
    return SupportFourierTable.circle(radius, center)


@dataclass(frozen=True)
class IdentityExample:
    triangle: Polygon
    tables: tuple[ConvexTable, ConvexTable, ConvexTable]
    cycle: NDArray[np.float64] = field(repr=False)
    closure_error: float
    differential: NDArray[np.float64]
    matrix_product: NDArray[np.float64]

    @property
    def differential_error(self) -> float:
        return float(np.linalg.norm(self.differential - np.eye(2)))

    @property
    def matrix_product_error(self) -> float:
        return float(np.linalg.norm(self.matrix_product - np.eye(2)))


def identity_example() -> IdentityExample:
    """単位正三角形と半径 1/√3 の3つの円で d(T_2∘T_1∘T_3)(z_1) = Id となる例。

    T_3: z_1 → z_2, T_1: z_2 → z_3, T_2: z_3 → z_1。頂点は時計回りに並ぶ。
    """
    triangle = clockwise_unit_triangle()
    z = triangle.vertices
    radius = 1.0 / np.sqrt(3.0)
    t3 = tangent_circle(z[0], z[1], radius)
    t1 = tangent_circle(z[1], z[2], radius)
    t2 = tangent_circle(z[2], z[0], radius)
    sequence = [t3, t1, t2]
    cycle = [z[0]]
    for table in sequence:
        cycle.append(outer_map(table, cycle[-1]))
    _, differential = compose_maps(sequence, z[0])
    alpha = np.pi / 3.0
    product = matrix_identity_product([alpha] * 3, [radius] * 3, [0.5] * 3)
    return IdentityExample(
        triangle=triangle,
        tables=(t1, t2, t3),
        cycle=np.array(cycle),
        closure_error=float(np.linalg.norm(cycle[-1] - cycle[0])),
        differential=differential,
        matrix_product=product,
    )


@dataclass(frozen=True)
class ObstructionReport:
    params: NDArray[np.float64] = field(repr=False)
    residuals: NDArray[np.float64] = field(repr=False)
    derivative: float
    zero_only_at_symmetric: bool
    even: bool

    @property
    def certified(self) -> bool:
        return abs(self.derivative) > 0.1 and self.zero_only_at_symmetric


def obstruction_family(param: float, base: Polygon | None = None) -> Polygon:
    """z_1, z_3 を中点を保って直線 z_1 z_3 に沿って (1+τ) 倍に広げ、面積が変わらないよう z_2 を高さ方向に動かす。"""
    z = (base or clockwise_unit_triangle()).vertices
    mid = 0.5 * (z[0] + z[2])
    foot_dir = z[2] - z[0]
    foot_dir = foot_dir / np.linalg.norm(foot_dir)
    foot = mid + float((z[1] - mid) @ foot_dir) * foot_dir
    height = z[1] - foot
    stretch = 1.0 + param
    return Polygon(
        np.array([mid + stretch * (z[0] - mid), foot + height / stretch, mid + stretch * (z[2] - mid)])
    )


def obstruction_demo(n_samples: int = 21, span: float = 0.05, base: Polygon | None = None) -> ObstructionReport:
    base = base or clockwise_unit_triangle()
    # テーブルは固定: ρ_2 は対称な配置で A ρ = 2 r^3 を満たす値
    reference = expr1_residual(base, 1.0)
    rho = 2.0 * reference.r**3 / reference.area
    params = np.linspace(-span, span, n_samples)
    residuals = np.array([expr1_residual(obstruction_family(p, base), rho).area_form for p in params])
    h = 1e-6
    derivative = (
        expr1_residual(obstruction_family(h, base), rho).area_form
        - expr1_residual(obstruction_family(-h, base), rho).area_form
    ) / (2.0 * h)
    nonzero = np.abs(params) > 1e-12
    zero_only = bool(np.all(np.abs(residuals[nonzero]) > 1e-12)) and bool(np.all(np.abs(residuals[~nonzero]) < 1e-12))
    even = bool(np.allclose(residuals, residuals[::-1], atol=1e-12))
    return ObstructionReport(
        params=params,
        residuals=residuals,
        derivative=float(derivative),
        zero_only_at_symmetric=zero_only,
        even=even,
    )


def open_set_fraction(
    table: ConvexTable,
    center: ArrayLike,
    radius: float,
    n: int,
    *,
    grid: int = 21,
    tol: float = 1e-9,
) -> float:
    """center を中心とする半径 radius の円板内の格子点のうち |T^n(x) - x| < tol となる割合。"""
    center = np.asarray(center, dtype=float)
    offsets = np.linspace(-radius, radius, grid)
    hits = 0
    total = 0
    for dx in offsets:
        for dy in offsets:
            if dx * dx + dy * dy > radius * radius:
                continue
            total += 1
            x = center + np.array([dx, dy])
            try:
                y = x
                for _ in range(n):
                    y = outer_map(table, y)
            except OuterBilliardError:
                continue
            if np.linalg.norm(y - x) < tol:
                hits += 1
    return hits / total


@dataclass(frozen=True)
class RoundedSquareReport:
    half_side: float
    side_radius: float
    periodic_point: NDArray[np.float64]
    orbit: NDArray[np.float64] = field(repr=False)
    disk_radius: float
    fraction: float


def rounded_square_demo(
    side_radius: float = 5.0,
    disk_radius: float = 0.05,
    *,
    half_side: float = 1.0,
    grid: int = 21,
    tol: float = 1e-9,
) -> RoundedSquareReport:
    # 対称軸上の点 (0, -2a) は4つの角での点反射をたどる4周期点
    table = PiecewiseArcsTable.rounded_square(half_side, side_radius)
    point = np.array([0.0, -2.0 * half_side])
    orbit = iterate_orbit(table, point, 4)
    fraction = open_set_fraction(table, point, disk_radius, 4, grid=grid, tol=tol)
    logger.info(f"丸い正方形: 円板半径={disk_radius}, 4周期点の割合={fraction:.3f}")
    return RoundedSquareReport(
        half_side=half_side,
        side_radius=side_radius,
        periodic_point=point,
        orbit=orbit,
        disk_radius=disk_radius,
        fraction=fraction,
    )


def smooth_contrast(amplitude: float = 0.02, disk_radius: float = 1e-2, *, grid: int = 21, tol: float = 1e-9) -> tuple[OrbitReport, float]:
    # 滑らかなテーブル h = 1 + ε cos 4θ では4周期点は開集合をなさない
    table = SupportFourierTable(1.0, np.array([[0.0, 0.0]] * 3 + [[amplitude, 0.0]]))
    orbit = find_periodic(table, 4, 1, (np.sqrt(2.0), 0.0))
    return orbit, open_set_fraction(table, orbit.points[0], disk_radius, 4, grid=grid, tol=tol)
