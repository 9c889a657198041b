from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Self, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from src.errors import FitFailureError, GeometricDegeneracyError, InvalidTableError, OutsideDomainError, SingularLineError
from src.geometry import Vec2, cross, rot90, unit

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DOMAIN_TOL = 1e-12
VALIDATION_GRID = 1024


class Side(IntEnum):
    # 外部点から見た接線の向き: RIGHT は T、LEFT は T^{-1} に対応
    RIGHT = 1
    LEFT = -1


@dataclass(frozen=True)
class TangencyFrame:
    point: Vec2
    theta: float
    rho: float
    unit_tangent: Vec2

    @property
    def unit_normal(self) -> Vec2:
        # 外向き法線
        return -rot90(self.unit_tangent)


@dataclass(frozen=True)
class MapDifferential:
    world: NDArray[np.float64]
    segment: NDArray[np.float64]
    frame: TangencyFrame
    r: float

    @property
    def rotation(self) -> NDArray[np.float64]:
        # 列が (e1, e2): e1 は x→y 方向、e2 はテーブル側
        e1 = self.frame.unit_tangent
        return np.column_stack([e1, rot90(e1)])


class ConvexTable(ABC):
    """凸なテーブル D の共通インターフェース。

    boundary_point(θ) は外向き法線角 θ の支持点を返し、θ の増加とともに境界を反時計回りにたどる。
    """

    @abstractmethod
    def boundary_point(self, theta: float) -> Vec2: ...

    @abstractmethod
    def curvature_radius(self, theta: float) -> float: ...

    @abstractmethod
    def tangency(self, x: Vec2, side: Side) -> TangencyFrame: ...

    @cached_property
    def scale(self) -> float:
        points = sample_boundary(self, 256)
        diffs = points[:, None, :] - points[None, :, :]
        return float(np.max(np.linalg.norm(diffs, axis=-1)))

    def transformed(self, matrix: ArrayLike, offset: ArrayLike = (0.0, 0.0)) -> ConvexTable:
        return AffineTable(self, matrix, offset)

    def rotated(self, angle: float) -> ConvexTable:
        c, s = np.cos(angle), np.sin(angle)
        return self.transformed([[c, -s], [s, c]])

    def scaled(self, factor: float) -> ConvexTable:
        return self.transformed(factor * np.eye(2))

    def translated(self, offset: ArrayLike) -> ConvexTable:
        return self.transformed(np.eye(2), offset)


class SupportFunctionTable(ConvexTable):
    """支持関数 h(θ) で与えられる滑らかな狭義凸テーブル。

    γ(θ) = h n + h′ n⊥,  γ′(θ) = ρ n⊥,  ρ = h + h″。
    接点は f(θ) = h(θ) − x·n(θ) の根で、f′ > 0 の根が右接線になる。
    """

    @abstractmethod
    def support(self, theta: ArrayLike, nu: int = 0) -> NDArray[np.float64]:
        """h の nu 階導関数を θ で評価する。"""

    @property
    @abstractmethod
    def bracket_grid_size(self) -> int: ...

    def _check_convexity(self) -> None:
        theta = np.linspace(0.0, TWO_PI, VALIDATION_GRID, endpoint=False)
        rho = self.support(theta) + self.support(theta, 2)
        if np.min(rho) <= 0.0:
            index = int(np.argmin(rho))
            raise InvalidTableError(f"曲率半径が正ではありません: θ={theta[index]:.6f}, ρ={rho[index]:.6e}")

    def curvature_radius(self, theta: float) -> float:
        rho = float(self.support(theta) + self.support(theta, 2))
        if rho <= 0.0:
            raise InvalidTableError(f"曲率半径が正ではありません: θ={theta:.6f}, ρ={rho:.6e}")
        return rho

    def boundary_point(self, theta: float) -> Vec2:
        self.curvature_radius(theta)
        n = unit(theta)
        return float(self.support(theta)) * n + float(self.support(theta, 1)) * rot90(n)

    def _f(self, theta: ArrayLike, x: Vec2) -> NDArray[np.float64]:
        return self.support(theta) - unit(theta) @ x

    def _df(self, theta: ArrayLike, x: Vec2) -> NDArray[np.float64]:
        return self.support(theta, 1) - rot90(unit(theta)) @ x

    def _bracket(self, x: Vec2, side: Side) -> tuple[float, float]:
        count = self.bracket_grid_size
        grid = np.linspace(0.0, TWO_PI, count + 1)
        values = self._f(grid[:-1], x)
        nxt = np.roll(values, -1)
        if side is Side.RIGHT:
            hits = np.flatnonzero((values < 0.0) & (nxt >= 0.0))
        else:
            hits = np.flatnonzero((values > 0.0) & (nxt <= 0.0))
        if hits.size:
            j = int(hits[0])
            return float(grid[j]), float(grid[j + 1])

        # 格子に符号変化がない: 最小点の近くを精密に探す
        j = int(np.argmin(values))
        step = TWO_PI / count
        result = minimize_scalar(
            lambda t: float(self._f(t, x)),
            bounds=(grid[j] - step, grid[j] + step),
            method="bounded",
            options={"xatol": 1e-14},
        )
        if result.fun >= -DOMAIN_TOL * self.scale:
            raise OutsideDomainError(f"点 {x.tolist()} はテーブルの内部または境界上にあります")
        if side is Side.RIGHT:
            return float(result.x), float(grid[j] + step)
        return float(grid[j] - step), float(result.x)

    def _root(self, x: Vec2, side: Side, lo: float, hi: float) -> float:
        # brentq と同じスカラー評価で端点の符号を確かめる
        tol = DOMAIN_TOL * self.scale
        step = TWO_PI / self.bracket_grid_size

        def f(t: float) -> float:
            return float(self._f(t, x))

        f_lo, f_hi = f(lo), f(hi)
        for _ in range(2):
            if abs(f_lo) <= tol:
                return lo
            if abs(f_hi) <= tol:
                return hi
            if np.sign(f_lo) != np.sign(f_hi):
                break
            # 根が区間のすぐ外にある: 足りない側へ1セル広げる
            if (f_hi < 0.0) == (side is Side.RIGHT):
                hi += step
                f_hi = f(hi)
            else:
                lo -= step
                f_lo = f(lo)
        try:
            return float(brentq(f, lo, hi, xtol=1e-15, maxiter=200))
        except ValueError as e:
            raise OutsideDomainError(f"点 {x.tolist()} の接点を囲む区間が見つかりません: [{lo:.6f}, {hi:.6f}]") from e

    def tangency(self, x: Vec2, side: Side) -> TangencyFrame:
        x = np.asarray(x, dtype=float)
        lo, hi = self._bracket(x, side)
        theta = self._root(x, side, lo, hi)
        for _ in range(2):
            slope = float(self._df(theta, x))
            if slope == 0.0:
                break
            candidate = theta - float(self._f(theta, x)) / slope
            if abs(float(self._f(candidate, x))) < abs(float(self._f(theta, x))):
                theta = candidate
        theta = float(np.mod(theta, TWO_PI))
        return TangencyFrame(
            point=self.boundary_point(theta),
            theta=theta,
            rho=self.curvature_radius(theta),
            unit_tangent=rot90(unit(theta)),
        )


@dataclass(frozen=True, eq=False)
class SupportFourierTable(SupportFunctionTable):
    h0: float
    coefficients: NDArray[np.float64] = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(coefficients)) or not np.isfinite(self.h0):
            raise InvalidTableError("支持関数の係数に有限でない値が含まれています")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        k = np.arange(1, self.truncation + 1)
        amplitude = np.hypot(coefficients[:, 0], coefficients[:, 1]) if self.truncation else np.zeros(0)
        # ρ の下界が正なら格子検査は不要
        if self.h0 - float(np.sum(np.abs(1 - k**2) * amplitude)) <= 0.0:
            self._check_convexity()

    @classmethod
    def circle(cls, radius: float = 1.0, center: ArrayLike = (0.0, 0.0)) -> Self:
        cx, cy = np.asarray(center, dtype=float)
        if cx == 0.0 and cy == 0.0:
            return cls(radius)
        return cls(radius, np.array([[cx, cy]]))

    @property
    def truncation(self) -> int:
        return self.coefficients.shape[0]

    @property
    def bracket_grid_size(self) -> int:
        return max(64 * self.truncation, 256)

    def support(self, theta: ArrayLike, nu: int = 0) -> NDArray[np.float64]:
        theta = np.asarray(theta, dtype=float)
        result = np.full(theta.shape, self.h0 if nu == 0 else 0.0)
        if self.truncation == 0:
            return result
        k = np.arange(1, self.truncation + 1)
        phase = np.multiply.outer(theta, k) + nu * np.pi / 2.0
        weight = k.astype(float) ** nu
        a, b = self.coefficients[:, 0], self.coefficients[:, 1]
        return result + (np.cos(phase) * (weight * a)).sum(axis=-1) + (np.sin(phase) * (weight * b)).sum(axis=-1)

    def rotated(self, angle: float) -> SupportFourierTable:
        k = np.arange(1, self.truncation + 1)
        c, s = np.cos(k * angle), np.sin(k * angle)
        a, b = self.coefficients[:, 0], self.coefficients[:, 1]
        return SupportFourierTable(self.h0, np.column_stack([a * c - b * s, a * s + b * c]))

    def scaled(self, factor: float) -> ConvexTable:
        if factor <= 0.0:
            return super().scaled(factor)
        return SupportFourierTable(factor * self.h0, factor * self.coefficients)

    def translated(self, offset: ArrayLike) -> SupportFourierTable:
        coefficients = np.zeros((max(self.truncation, 1), 2))
        coefficients[: self.truncation] = self.coefficients
        coefficients[0] += np.asarray(offset, dtype=float)
        return SupportFourierTable(self.h0, coefficients)


@dataclass(frozen=True, eq=False)
class SplineSupportTable(SupportFunctionTable):
    thetas: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        thetas = np.asarray(self.thetas, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if thetas.shape != values.shape or thetas.ndim != 1 or thetas.size < 8:
            raise InvalidTableError("スプライン支持関数の標本が不足しているか形状が一致しません")
        order = np.argsort(np.mod(thetas, TWO_PI))
        thetas = np.mod(thetas, TWO_PI)[order]
        values = values[order]
        keep = np.concatenate([[True], np.diff(thetas) > 1e-12])
        thetas, values = thetas[keep], values[keep]
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "values", values)
        knots = np.append(thetas, thetas[0] + TWO_PI)
        object.__setattr__(self, "_spline", CubicSpline(knots, np.append(values, values[0]), bc_type="periodic"))
        self._check_convexity()

    @property
    def bracket_grid_size(self) -> int:
        return 4096

    def support(self, theta: ArrayLike, nu: int = 0) -> NDArray[np.float64]:
        theta = np.asarray(theta, dtype=float)
        base = self.thetas[0]
        return np.asarray(self._spline(np.mod(theta - base, TWO_PI) + base, nu))


@dataclass(frozen=True)
class Arc:
    """中心 center、半径 radius の円弧。外向き法線角が [theta_start, theta_end] を動く。半径0は角。"""

    center: Vec2
    radius: float
    theta_start: float
    theta_end: float

    @property
    def span(self) -> float:
        return self.theta_end - self.theta_start

    def point(self, theta: float) -> Vec2:
        return np.asarray(self.center, dtype=float) + self.radius * unit(theta)

    def offset(self, theta: float) -> float | None:
        # 法線角が円弧の範囲にあれば始点からの角度、なければ None
        delta = float(np.mod(theta - self.theta_start, TWO_PI))
        if delta <= self.span + 1e-12:
            return delta
        if delta >= TWO_PI - 1e-12:
            return 0.0
        return None


@dataclass(frozen=True, eq=False)
class PiecewiseArcsTable(ConvexTable):
    """円弧・角・線分からなる凸テーブル。

    隣り合う円弧の端点が異なるとき、その間は線分とみなす。線分を含む直線上では T が定義されない。
    """

    arcs: tuple[Arc, ...]

    def __post_init__(self) -> None:
        arcs = tuple(
            Arc(np.asarray(arc.center, dtype=float), float(arc.radius), float(arc.theta_start), float(arc.theta_end))
            for arc in self.arcs
        )
        object.__setattr__(self, "arcs", arcs)
        if len(arcs) < 2:
            raise InvalidTableError("区分円弧テーブルには2つ以上の円弧が必要です")
        for i, arc in enumerate(arcs):
            if arc.radius < 0.0 or arc.span <= 0.0:
                raise InvalidTableError(f"円弧 {i} の半径または角度範囲が不正です")
        total = sum(arc.span for arc in arcs)
        if abs(total - TWO_PI) > 1e-9:
            raise InvalidTableError(f"法線角の総回転が 2π ではありません: {total:.12f}")
        for i, arc in enumerate(arcs):
            following = arcs[(i + 1) % len(arcs)]
            gap = float(np.mod(following.theta_start - arc.theta_end + np.pi, TWO_PI) - np.pi)
            if abs(gap) > 1e-9:
                raise InvalidTableError(f"円弧 {i} と {i + 1} の接線が連続していません")
            segment = following.point(following.theta_start) - arc.point(arc.theta_end)
            length = float(np.linalg.norm(segment))
            if length > 1e-12 and abs(float(segment @ unit(arc.theta_end))) > 1e-9 * length:
                raise InvalidTableError(f"円弧 {i} と {i + 1} の間の線分が接線方向ではありません")
            if float(segment @ rot90(unit(arc.theta_end))) < -1e-12:
                raise InvalidTableError(f"円弧 {i} と {i + 1} の間の線分の向きが逆です")

    @classmethod
    def rounded_square(cls, half_side: float = 1.0, side_radius: float = 5.0) -> Self:
        # 各辺は角 (±a, ±a) を通る半径 R の円弧、角は半径0
        a, big = half_side, side_radius
        if big <= a:
            raise InvalidTableError(f"辺の曲率半径は半辺長より大きくなければなりません: R={big}, a={a}")
        half = float(np.arcsin(a / big))
        depth = a - float(np.sqrt(big**2 - a**2))
        arcs: list[Arc] = []
        for q in range(4):
            phi = q * np.pi / 2.0
            arcs.append(Arc(depth * unit(phi), big, phi - half, phi + half))
            corner = a * np.sqrt(2.0) * unit(phi + np.pi / 4.0)
            arcs.append(Arc(corner, 0.0, phi + half, phi + np.pi / 2.0 - half))
        return cls(tuple(arcs))

    def _locate(self, theta: float) -> Arc:
        for arc in self.arcs:
            if arc.offset(theta) is not None:
                return arc
        raise InvalidTableError(f"法線角 {theta} を含む円弧がありません")

    def boundary_point(self, theta: float) -> Vec2:
        return self._locate(theta).point(theta)

    def curvature_radius(self, theta: float) -> float:
        return self._locate(theta).radius

    def _segment_length(self, i: int) -> float:
        arc, following = self.arcs[i], self.arcs[(i + 1) % len(self.arcs)]
        return float(np.linalg.norm(following.point(following.theta_start) - arc.point(arc.theta_end)))

    def tangency(self, x: Vec2, side: Side) -> TangencyFrame:
        x = np.asarray(x, dtype=float)
        tol = DOMAIN_TOL * self.scale
        count = len(self.arcs)
        for i, arc in enumerate(self.arcs):
            d = x - arc.center
            distance = float(np.hypot(*d))
            if distance <= arc.radius + tol:
                continue
            theta = float(np.arctan2(d[1], d[0])) + side * float(np.arccos(arc.radius / distance))
            offset = arc.offset(theta)
            if offset is None:
                continue
            at_start = offset < 1e-12 or offset > TWO_PI - 1e-12
            at_end = abs(offset - arc.span) < 1e-12
            if (at_start and self._segment_length((i - 1) % count) > tol) or (
                at_end and self._segment_length(i) > tol
            ):
                raise SingularLineError(f"点 {x.tolist()} は線分を含む直線上にあり、写像が定義されません")
            theta = float(np.mod(theta, TWO_PI))
            return TangencyFrame(
                point=arc.point(theta),
                theta=theta,
                rho=arc.radius,
                unit_tangent=rot90(unit(theta)),
            )
        raise OutsideDomainError(f"点 {x.tolist()} はテーブルの内部または境界上にあります")


class AffineTable(ConvexTable):
    """向きを保つアフィン写像 g(p) = A p + b による base の像。T_{gD} = g T_D g^{-1}。"""

    def __init__(self, base: ConvexTable, matrix: ArrayLike, offset: ArrayLike = (0.0, 0.0)) -> None:
        matrix = np.asarray(matrix, dtype=float)
        offset = np.asarray(offset, dtype=float)
        if matrix.shape != (2, 2) or offset.shape != (2,):
            raise InvalidTableError("アフィン写像の形状が不正です")
        det = float(np.linalg.det(matrix))
        if det <= 0.0:
            raise InvalidTableError(f"アフィン写像は向きを保つ必要があります: det={det:.6e}")
        if isinstance(base, AffineTable):
            matrix, offset = matrix @ base.matrix, matrix @ base.offset + offset
            base = base.base
        self.base = base
        self.matrix = matrix
        self.offset = offset
        self._inverse = np.linalg.inv(matrix)
        self._det = float(np.linalg.det(matrix))

    def transformed(self, matrix: ArrayLike, offset: ArrayLike = (0.0, 0.0)) -> ConvexTable:
        return AffineTable(self, matrix, offset)

    def _base_theta(self, theta: float) -> float:
        normal = self.matrix.T @ unit(theta)
        return float(np.arctan2(normal[1], normal[0]))

    def _image_frame(self, frame: TangencyFrame) -> TangencyFrame:
        tangent = self.matrix @ frame.unit_tangent
        stretch = float(np.linalg.norm(tangent))
        normal = self._inverse.T @ frame.unit_normal
        return TangencyFrame(
            point=self.matrix @ frame.point + self.offset,
            theta=float(np.mod(np.arctan2(normal[1], normal[0]), TWO_PI)),
            rho=frame.rho * stretch**3 / self._det,
            unit_tangent=tangent / stretch,
        )

    def _base_frame(self, theta: float) -> TangencyFrame:
        base_theta = self._base_theta(theta)
        return TangencyFrame(
            point=self.base.boundary_point(base_theta),
            theta=base_theta,
            rho=self.base.curvature_radius(base_theta),
            unit_tangent=rot90(unit(base_theta)),
        )

    def boundary_point(self, theta: float) -> Vec2:
        return self.matrix @ self.base.boundary_point(self._base_theta(theta)) + self.offset

    def curvature_radius(self, theta: float) -> float:
        return self._image_frame(self._base_frame(theta)).rho

    def tangency(self, x: Vec2, side: Side) -> TangencyFrame:
        base_x = self._inverse @ (np.asarray(x, dtype=float) - self.offset)
        return self._image_frame(self.base.tangency(base_x, side))


def sample_boundary(table: ConvexTable, count: int = 512) -> NDArray[np.float64]:
    thetas = np.linspace(0.0, TWO_PI, count, endpoint=False)
    return np.array([table.boundary_point(t) for t in thetas])


def table_area(table: ConvexTable, count: int = 4096) -> float:
    points = sample_boundary(table, count)
    return 0.5 * float(np.sum(cross(points, np.roll(points, -1, axis=0))))


def boundary_point(table: ConvexTable, theta: float) -> Vec2:
    return table.boundary_point(theta)


def curvature_radius(table: ConvexTable, theta: float) -> float:
    return table.curvature_radius(theta)


def right_tangency(table: ConvexTable, x: ArrayLike) -> TangencyFrame:
    return table.tangency(np.asarray(x, dtype=float), Side.RIGHT)


def left_tangency(table: ConvexTable, x: ArrayLike) -> TangencyFrame:
    return table.tangency(np.asarray(x, dtype=float), Side.LEFT)


def outer_map(table: ConvexTable, x: ArrayLike) -> Vec2:
    x = np.asarray(x, dtype=float)
    return 2.0 * right_tangency(table, x).point - x


def outer_map_inverse(table: ConvexTable, y: ArrayLike) -> Vec2:
    y = np.asarray(y, dtype=float)
    return 2.0 * left_tangency(table, y).point - y


def outer_map_diff(table: ConvexTable, x: ArrayLike) -> MapDifferential:
    # 線分座標系では [[-1, -2ρ/r], [0, -1]]、r は x から支持点までの距離
    x = np.asarray(x, dtype=float)
    frame = right_tangency(table, x)
    r = float(np.linalg.norm(frame.point - x))
    shear = 2.0 * frame.rho / r
    segment = np.array([[-1.0, -shear], [0.0, -1.0]])
    world = -np.eye(2) + shear * np.outer(frame.unit_tangent, frame.unit_normal)
    return MapDifferential(world=world, segment=segment, frame=frame, r=r)


def mirror_residual(alpha: float, beta: float, rho: float, r: float) -> float:
    return 1.0 / np.tan(alpha) + 1.0 / np.tan(beta) - 2.0 * rho / r


@dataclass(frozen=True)
class MirrorAngles:
    alpha: float
    beta: float
    rho: float
    r: float

    @property
    def residual(self) -> float:
        return mirror_residual(self.alpha, self.beta, self.rho, self.r)


def mirror_angles(table: ConvexTable, x: ArrayLike, direction: ArrayLike) -> MirrorAngles:
    """x を通る直線 l と、dT による像の直線 m の角度 (α, β) を測る。

    α は l と x から y と反対向きの半直線のなす角、β は m と y から x と反対向きの半直線のなす角。
    どちらもテーブル側で測る。
    """
    diff = outer_map_diff(table, x)
    rotation = diff.rotation
    d = rotation.T @ np.asarray(direction, dtype=float)
    if abs(d[1]) < 1e-14 * np.linalg.norm(d):
        raise GeometricDegeneracyError("直線 l が線分 xy と平行です")
    if d[1] < 0.0:
        d = -d
    image = rotation.T @ (diff.world @ (rotation @ d))
    if image[1] < 0.0:
        image = -image
    alpha = float(np.arctan2(d[1], -d[0]))
    beta = float(np.arctan2(image[1], image[0]))
    return MirrorAngles(alpha=alpha, beta=beta, rho=diff.frame.rho, r=diff.r)


@dataclass(frozen=True)
class SupportSamples:
    """接線の標本 (外向き法線角, 支持値)。包絡線からテーブルを復元するときの入力。"""

    thetas: NDArray[np.float64]
    values: NDArray[np.float64]
    scale: float

    @classmethod
    def from_tangent_lines(cls, points: ArrayLike, directions: ArrayLike) -> Self:
        # 点 points[i] で方向 directions[i] の直線に接し、テーブルは直線の左側にある
        points = np.asarray(points, dtype=float)
        d = np.asarray(directions, dtype=float)
        length = np.hypot(d[:, 0], d[:, 1])
        mask = length > 0.0
        points, d, length = points[mask], d[mask], length[mask]
        normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        center = points.mean(axis=0)
        return cls(
            thetas=np.arctan2(normal[:, 1], normal[:, 0]),
            values=np.einsum("ij,ij->i", points, normal),
            scale=2.0 * float(np.max(np.linalg.norm(points - center, axis=1))),
        )

    @classmethod
    def from_polyline(cls, points: ArrayLike) -> Self:
        # 反時計回りの閉折れ線の各辺を接線とみなす
        z = np.asarray(points, dtype=float)
        d = np.roll(z, -1, axis=0) - z
        return cls.from_tangent_lines(z + 0.5 * d, d)


def fit_support_fourier(
    samples: SupportSamples,
    harmonics: int = 24,
    *,
    tol: float = 1e-6,
) -> SupportFourierTable:
    thetas, values = samples.thetas, samples.values
    harmonics = min(harmonics, max((thetas.size - 1) // 2, 0))
    k = np.arange(1, harmonics + 1)
    design = np.column_stack([np.ones_like(thetas), np.cos(np.outer(thetas, k)), np.sin(np.outer(thetas, k))])
    solution, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = float(np.max(np.abs(design @ solution - values)))
    logger.debug(f"支持関数フィット: K={harmonics}, 残差={residual:.3e}")
    if residual > tol * samples.scale:
        raise FitFailureError(f"支持関数のフィット残差が許容値を超えました: {residual:.3e}", residual)
    coefficients = np.column_stack([solution[1 : harmonics + 1], solution[harmonics + 1 :]])
    return SupportFourierTable(float(solution[0]), coefficients)


def spline_support_table(samples: SupportSamples) -> SplineSupportTable:
    return SplineSupportTable(samples.thetas, samples.values)


def circle(radius: float = 1.0, center: Sequence[float] = (0.0, 0.0)) -> SupportFourierTable:
    return SupportFourierTable.circle(radius, center)


def ellipse(semi_x: float, semi_y: float) -> AffineTable:
    return AffineTable(SupportFourierTable.circle(1.0), np.diag([semi_x, semi_y]))
