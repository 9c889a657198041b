from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from src.geometry import (
    DEFAULT_DEGENERACY_TOL,
    Polygon,
    PolyTangent,
    cross,
    require_nondegenerate,
    triangle_areas2,
)

logger = logging.getLogger(__name__)

RANK_TOL = 1e-8


@dataclass(frozen=True)
class DistributionFrame:
    base: Polygon
    fields: tuple[PolyTangent, ...]

    def matrix(self) -> NDArray[np.float64]:
        # 列 k が W_k を平坦化したもの (2n×n)
        return np.column_stack([w.flat() for w in self.fields])


def field_velocities(z: NDArray[np.float64], a: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    # w_k = a_{k+1}(z_k − z_{k−1}),  w_{k+1} = a_k(z_{k+2} − z_{k+1})、他の成分は0
    n = z.shape[0]
    w = np.zeros_like(z)
    w[k % n] = a[(k + 1) % n] * (z[k % n] - z[(k - 1) % n])
    w[(k + 1) % n] = a[k % n] * (z[(k + 2) % n] - z[(k + 1) % n])
    return w


def frame_field(polygon: Polygon, k: int) -> PolyTangent:
    return PolyTangent(field_velocities(polygon.vertices, triangle_areas2(polygon), k))


def frame(polygon: Polygon, *, tol: float = DEFAULT_DEGENERACY_TOL) -> DistributionFrame:
    require_nondegenerate(polygon, tol)
    z = polygon.vertices
    a = triangle_areas2(polygon)
    return DistributionFrame(polygon, tuple(PolyTangent(field_velocities(z, a, k)) for k in range(polygon.n)))


def frame_matrix(polygon: Polygon, *, tol: float = DEFAULT_DEGENERACY_TOL) -> NDArray[np.float64]:
    return frame(polygon, tol=tol).matrix()


def alpha(polygon: Polygon, i: int, w: PolyTangent) -> float:
    n = polygon.n
    edge = polygon[i + 1] - polygon[i]
    return float(cross(edge, w.velocities[(i + 1) % n] + w.velocities[i % n]))


def alphas(polygon: Polygon, w: PolyTangent) -> NDArray[np.float64]:
    w.check_attached(polygon)
    v = w.velocities
    return cross(polygon.edges(), np.roll(v, -1, axis=0) + v)


def alpha_matrix(polygon: Polygon) -> NDArray[np.float64]:
    """α_i の係数行列 (n×2n)。alpha_matrix(Z) @ W.flat() == alphas(Z, W)。"""
    n = polygon.n
    edges = polygon.edges()
    coefficients = np.zeros((n, n, 2))
    for i in range(n):
        row = np.array([-edges[i, 1], edges[i, 0]])
        coefficients[i, i] += row
        coefficients[i, (i + 1) % n] += row
    return coefficients.reshape(n, 2 * n)


def is_horizontal(polygon: Polygon, w: PolyTangent, tol: float = 1e-9) -> bool:
    scale = polygon.diameter()
    return bool(np.all(np.abs(alphas(polygon, w)) <= tol * scale**3))


def area_derivative(polygon: Polygon, w: PolyTangent) -> float:
    # dA(W) = Σ [w_i, z_{i+1}] + [z_i, w_{i+1}]
    z, v = polygon.vertices, w.velocities
    return float(np.sum(cross(v, np.roll(z, -1, axis=0)) + cross(z, np.roll(v, -1, axis=0))))


def area_gradient(polygon: Polygon) -> NDArray[np.float64]:
    z = polygon.vertices
    chord = np.roll(z, -1, axis=0) - np.roll(z, 1, axis=0)
    return np.column_stack([chord[:, 1], -chord[:, 0]]).reshape(-1)


def sum_alpha_vs_dA(polygon: Polygon, w: PolyTangent) -> tuple[float, float]:
    return float(np.sum(alphas(polygon, w))), area_derivative(polygon, w)


def omega_pair(i: int, v: PolyTangent, w: PolyTangent) -> float:
    n = v.n
    return float(cross(v.velocities[i % n], w.velocities[i % n]))


def d_alpha_pair(polygon: Polygon, i: int, v: PolyTangent, w: PolyTangent) -> float:
    return 2.0 * (omega_pair(i + 1, v, w) - omega_pair(i, v, w))


def _area_derivatives(z: NDArray[np.float64], v: NDArray[np.float64]) -> NDArray[np.float64]:
    # δa_i = [δe_{i−1}, e_i] + [e_{i−1}, δe_i]
    e = np.roll(z, -1, axis=0) - z
    de = np.roll(v, -1, axis=0) - v
    return cross(np.roll(de, 1, axis=0), e) + cross(np.roll(e, 1, axis=0), de)


def field_derivative(polygon: Polygon, k: int, direction: PolyTangent) -> PolyTangent:
    """W_k の方向微分 DW_k·V。成分は頂点座標の多項式なので厳密に微分できる。"""
    z, v = polygon.vertices, direction.velocities
    n = polygon.n
    a = triangle_areas2(polygon)
    da = _area_derivatives(z, v)
    k0, k1, k2, km = k % n, (k + 1) % n, (k + 2) % n, (k - 1) % n
    result = np.zeros_like(z)
    result[k0] += da[k1] * (z[k0] - z[km]) + a[k1] * (v[k0] - v[km])
    result[k1] += da[k0] * (z[k2] - z[k1]) + a[k0] * (v[k2] - v[k1])
    return PolyTangent(result)


def _flow(field: Callable[[NDArray[np.float64]], NDArray[np.float64]], z: NDArray[np.float64], h: float, steps: int) -> NDArray[np.float64]:
    dt = h / steps
    for _ in range(steps):
        k1 = field(z)
        k2 = field(z + 0.5 * dt * k1)
        k3 = field(z + 0.5 * dt * k2)
        k4 = field(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z


def _field_function(k: int) -> Callable[[NDArray[np.float64]], NDArray[np.float64]]:
    def evaluate(z: NDArray[np.float64]) -> NDArray[np.float64]:
        e = np.roll(z, -1, axis=0) - z
        a = cross(np.roll(e, 1, axis=0), e)
        return field_velocities(z, a, k)

    return evaluate


def lie_bracket(
    polygon: Polygon,
    j: int,
    k: int,
    h: float | None = None,
    *,
    tol: float = DEFAULT_DEGENERACY_TOL,
) -> PolyTangent:
    """[W_j, W_k] = DW_k·W_j − DW_j·W_k。

    h を与えると 4つのフローの合成 φ^k_{−h} φ^j_{−h} φ^k_h φ^j_h の差分から近似する。
    """
    require_nondegenerate(polygon, tol)
    if h is None:
        wj, wk = frame_field(polygon, j), frame_field(polygon, k)
        return PolyTangent(
            field_derivative(polygon, k, wj).velocities - field_derivative(polygon, j, wk).velocities
        )
    fj, fk = _field_function(j), _field_function(k)
    z0 = polygon.vertices.copy()
    steps = 16
    z = _flow(fj, z0, h, steps)
    z = _flow(fk, z, h, steps)
    z = _flow(fj, z, -h, steps)
    z = _flow(fk, z, -h, steps)
    return PolyTangent((z - z0) / h**2)


def bracket_fields(polygon: Polygon) -> tuple[PolyTangent, ...]:
    # ξ_k = [W_{k−1}, W_k]
    return tuple(lie_bracket(polygon, k - 1, k) for k in range(polygon.n))


@dataclass(frozen=True)
class RankReport:
    n: int
    rank: int
    singular_values: tuple[float, ...]

    @property
    def expected(self) -> int:
        return 2 * self.n - 1

    @property
    def passed(self) -> bool:
        return self.rank == self.expected


def bracket_growth_report(polygon: Polygon, *, tol: float = RANK_TOL) -> RankReport:
    normalized = polygon.normalized()
    require_nondegenerate(normalized)
    columns = [w.flat() for w in frame(normalized).fields]
    columns += [xi.flat() for xi in bracket_fields(normalized)]
    matrix = np.column_stack([c / np.linalg.norm(c) for c in columns])
    gradient = area_gradient(normalized)
    projector = np.eye(matrix.shape[0]) - np.outer(gradient, gradient) / (gradient @ gradient)
    singular = np.linalg.svd(projector @ matrix, compute_uv=False)
    rank = int(np.sum(singular > tol * singular[0]))
    logger.debug(f"括弧積の階数: n={polygon.n}, rank={rank}, 特異値={singular}")
    return RankReport(n=polygon.n, rank=rank, singular_values=tuple(float(s) for s in singular))


def bracket_growth_rank(polygon: Polygon, *, tol: float = RANK_TOL) -> int:
    return bracket_growth_report(polygon, tol=tol).rank
