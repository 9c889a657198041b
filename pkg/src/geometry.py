from __future__ import annotations

from dataclasses import dataclass, field
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import directed_hausdorff

from src.errors import DegeneratePolygonError, InvalidPolygonError

# 平面上の点・ベクトル (形状 (2,) の配列)
type Vec2 = NDArray[np.float64]

DEFAULT_DEGENERACY_TOL = 1e-10


def vec2(x: float, y: float) -> Vec2:
    return np.array([x, y], dtype=float)


def cross(a: ArrayLike, b: ArrayLike) -> float | NDArray[np.float64]:
    # 最後の軸を平面ベクトルとみなす (ブロードキャスト可)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    result = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    if np.ndim(result) == 0:
        return float(result)
    return result


def rot90(a: ArrayLike) -> NDArray[np.float64]:
    a = np.asarray(a, dtype=float)
    return np.stack([-a[..., 1], a[..., 0]], axis=-1)


def unit(angle: ArrayLike) -> NDArray[np.float64]:
    angle = np.asarray(angle, dtype=float)
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


@dataclass(frozen=True)
class Polygon:
    vertices: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InvalidPolygonError(f"頂点配列の形状が不正です: {vertices.shape}")
        if vertices.shape[0] < 3:
            raise InvalidPolygonError(f"頂点数は3以上が必要です: {vertices.shape[0]}")
        if not np.all(np.isfinite(vertices)):
            raise InvalidPolygonError("頂点座標に有限でない値が含まれています")
        gaps = np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1)
        if np.any(gaps == 0.0):
            index = int(np.argmin(gaps))
            raise InvalidPolygonError(f"隣接する頂点が一致しています: z_{index} = z_{index + 1}")
        vertices.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def from_points(cls, points: ArrayLike) -> Self:
        return cls(np.asarray(points, dtype=float))

    @classmethod
    def regular(cls, n: int, *, k: int = 1, radius: float = 1.0, phase: float = 0.0) -> Self:
        angles = phase + 2.0 * np.pi * k * np.arange(n) / n
        return cls(radius * unit(angles))

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Vec2:
        return self.vertices[i % self.n]

    def edges(self) -> NDArray[np.float64]:
        # edges()[i] = z_{i+1} - z_i
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def diameter(self) -> float:
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.max(np.linalg.norm(diffs, axis=-1)))

    def centroid(self) -> Vec2:
        return self.vertices.mean(axis=0)

    def transformed(self, matrix: ArrayLike, offset: ArrayLike = (0.0, 0.0)) -> Polygon:
        matrix = np.asarray(matrix, dtype=float)
        return Polygon(self.vertices @ matrix.T + np.asarray(offset, dtype=float))

    def normalized(self) -> Polygon:
        # 重心を原点に、直径を1にそろえる
        return Polygon((self.vertices - self.centroid()) / self.diameter())

    def to_json(self) -> list[list[float]]:
        return self.vertices.tolist()

    @classmethod
    def from_json(cls, data: list[list[float]]) -> Self:
        return cls(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class PolyTangent:
    velocities: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        velocities = np.array(self.velocities, dtype=float)
        if velocities.ndim != 2 or velocities.shape[1] != 2:
            raise InvalidPolygonError(f"速度配列の形状が不正です: {velocities.shape}")
        velocities.setflags(write=False)
        object.__setattr__(self, "velocities", velocities)

    @classmethod
    def zeros(cls, n: int) -> Self:
        return cls(np.zeros((n, 2)))

    @classmethod
    def from_flat(cls, flat: ArrayLike) -> Self:
        return cls(np.asarray(flat, dtype=float).reshape(-1, 2))

    @property
    def n(self) -> int:
        return self.velocities.shape[0]

    def flat(self) -> NDArray[np.float64]:
        return self.velocities.reshape(-1)

    def __add__(self, other: PolyTangent) -> PolyTangent:
        return PolyTangent(self.velocities + other.velocities)

    def __mul__(self, scalar: float) -> PolyTangent:
        return PolyTangent(scalar * self.velocities)

    __rmul__ = __mul__

    def check_attached(self, polygon: Polygon) -> None:
        if self.n != polygon.n:
            raise InvalidPolygonError(f"接ベクトルの長さ {self.n} が多角形の頂点数 {polygon.n} と一致しません")


def area2(polygon: Polygon) -> float:
    z = polygon.vertices
    return float(np.sum(cross(z, np.roll(z, -1, axis=0))))


def triangle_areas2(polygon: Polygon) -> NDArray[np.float64]:
    # a_i = [z_i - z_{i-1}, z_{i+1} - z_i]
    edges = polygon.edges()
    return cross(np.roll(edges, 1, axis=0), edges)


def triangle_area2(polygon: Polygon, i: int) -> float:
    return float(triangle_areas2(polygon)[i % polygon.n])


def is_nondegenerate(polygon: Polygon, tol: float = DEFAULT_DEGENERACY_TOL) -> bool:
    scale = polygon.diameter()
    return bool(np.all(np.abs(triangle_areas2(polygon)) > tol * scale**2))


def require_nondegenerate(polygon: Polygon, tol: float = DEFAULT_DEGENERACY_TOL) -> None:
    if not is_nondegenerate(polygon, tol):
        a = triangle_areas2(polygon)
        index = int(np.argmin(np.abs(a)))
        raise DegeneratePolygonError(f"連続する3頂点が一直線上にあります (i={index}, a_i={a[index]:.3e})")


def cyclic_shift(polygon: Polygon, s: int) -> Polygon:
    # 結果の頂点 i は入力の頂点 i+s
    return Polygon(np.roll(polygon.vertices, -s, axis=0))


def is_convex_curve(points: ArrayLike) -> bool:
    # 周期的な差分で [m′, m″] > 0 を確かめる (反時計回りの閉曲線)
    points = np.asarray(points, dtype=float)
    forward = np.roll(points, -1, axis=0)
    backward = np.roll(points, 1, axis=0)
    first = 0.5 * (forward - backward)
    second = forward - 2.0 * points + backward
    return bool(np.all(cross(first, second) > 0.0))


def hausdorff_distance(a: ArrayLike, b: ArrayLike) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))
