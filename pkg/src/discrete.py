from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import null_space

from src.errors import InvalidParameterError, InvalidPolygonError, NonConvergenceError
from src.geometry import Polygon, cross, triangle_areas2
from src.util import IterationEvent, on_solver_iteration

logger = logging.getLogger(__name__)

PARALLEL_TOL = 1e-10


class Slot(IntEnum):
    A = 0
    B = 1
    C = 2


# 頂点を動かす順番: A, C, B, A, C, B, ...
CADENCE = (Slot.A, Slot.C, Slot.B)


@dataclass(frozen=True)
class Move:
    slot: Slot
    source: int
    target: int


@dataclass(frozen=True)
class DiscreteState:
    host: Polygon
    triangle: tuple[int, int, int]

    def __post_init__(self) -> None:
        triangle = tuple(int(i) % self.host.n for i in self.triangle)
        if len(triangle) != 3 or len(set(triangle)) != 3:
            raise InvalidPolygonError(f"三角形の頂点番号が不正です: {self.triangle}")
        if not np.all(triangle_areas2(self.host) > 0.0):
            raise InvalidPolygonError("外側の多角形が反時計回りの凸多角形ではありません")
        object.__setattr__(self, "triangle", triangle)

    def moved(self, move: Move) -> DiscreteState:
        triangle = list(self.triangle)
        triangle[move.slot] = move.target
        return DiscreteState(self.host, tuple(triangle))

    def to_json(self) -> dict[str, object]:
        return {"host": self.host.to_json(), "triangle": list(self.triangle)}


def legal_moves(state: DiscreteState, tol: float = PARALLEL_TOL, previous: Move | None = None) -> list[Move]:
    """三角形の頂点を隣の頂点へ滑らせる手のうち、その辺が対辺に平行なもの。"""
    host = state.host
    k = host.n
    threshold = tol * host.diameter() ** 2
    occupied = set(state.triangle)
    moves = []
    for slot in Slot:
        source = state.triangle[slot]
        others = [state.triangle[s] for s in Slot if s != slot]
        opposite = host[others[1]] - host[others[0]]
        for step in (1, -1):
            target = (source + step) % k
            if target in occupied:
                continue
            if previous is not None and previous.slot == slot and previous.source == target and previous.target == source:
                continue
            if abs(cross(host[target] - host[source], opposite)) < threshold:
                moves.append(Move(slot, source, target))
    return moves


@dataclass(frozen=True)
class RotationReport:
    states: tuple[DiscreteState, ...] = field(repr=False)
    moves: tuple[Move, ...]
    relabeled_at: int | None
    exact_at: int | None
    stuck: bool

    @property
    def completed(self) -> bool:
        return self.exact_at is not None


def _pick(moves: list[Move], cadence_index: int) -> tuple[Move, int] | None:
    for offset in range(len(CADENCE)):
        position = (cadence_index + offset) % len(CADENCE)
        candidates = [m for m in moves if m.slot == CADENCE[position]]
        if candidates:
            return min(candidates, key=lambda m: m.target), position
    return None


def rotate_sequence(state: DiscreteState, max_moves: int = 200, *, tol: float = PARALLEL_TOL) -> RotationReport:
    start = state.triangle
    states = [state]
    moves: list[Move] = []
    relabeled_at: int | None = None
    cadence_index = 0
    previous: Move | None = None
    while len(moves) < max_moves:
        picked = _pick(legal_moves(state, tol, previous), cadence_index)
        if picked is None:
            logger.info(f"三角形の回転が {len(moves)} 手目で行き詰まりました")
            return RotationReport(tuple(states), tuple(moves), relabeled_at, None, stuck=True)
        move, position = picked
        state = state.moved(move)
        states.append(state)
        moves.append(move)
        previous = move
        cadence_index = (position + 1) % len(CADENCE)
        if relabeled_at is None and set(state.triangle) == set(start):
            relabeled_at = len(moves)
        if state.triangle == start:
            logger.info(f"三角形が {len(moves)} 手で元の位置に戻りました")
            return RotationReport(tuple(states), tuple(moves), relabeled_at, len(moves), stuck=False)
    return RotationReport(tuple(states), tuple(moves), relabeled_at, None, stuck=False)


def _check_size(polygon: Polygon, n: int) -> None:
    if polygon.n != 3 * n + 1:
        raise InvalidParameterError(f"頂点数は 3n+1 = {3 * n + 1} である必要があります: {polygon.n}")


def _index_sets(k: int, n: int) -> tuple[NDArray[np.int_], NDArray[np.int_], NDArray[np.int_], NDArray[np.int_]]:
    i = np.arange(k)
    return i, (i + 1) % k, (i + n + 1) % k, (i + 2 * n + 1) % k


def parallel_residuals(polygon: Polygon, n: int) -> NDArray[np.float64]:
    # [z_{i+1} - z_i, z_{i+2n+1} - z_{i+n+1}]
    _check_size(polygon, n)
    z = polygon.vertices
    i0, i1, j0, j1 = _index_sets(polygon.n, n)
    return cross(z[i1] - z[i0], z[j1] - z[j0])


def parallel_jacobian(polygon: Polygon, n: int) -> NDArray[np.float64]:
    _check_size(polygon, n)
    z = polygon.vertices
    k = polygon.n
    i0, i1, j0, j1 = _index_sets(k, n)
    f = z[i1] - z[i0]
    e = z[j1] - z[j0]
    jacobian = np.zeros((k, k, 2))
    rows = np.arange(k)
    d_f = np.column_stack([e[:, 1], -e[:, 0]])
    d_e = np.column_stack([-f[:, 1], f[:, 0]])
    np.add.at(jacobian, (rows, i1), d_f)
    np.add.at(jacobian, (rows, i0), -d_f)
    np.add.at(jacobian, (rows, j1), d_e)
    np.add.at(jacobian, (rows, j0), -d_e)
    return jacobian.reshape(k, 2 * k)


def affine_generators(polygon: Polygon) -> NDArray[np.float64]:
    # 平行移動2つと線形変換4つの無限小生成子 (2k × 6)
    z = polygon.vertices
    zeros, ones = np.zeros(polygon.n), np.ones(polygon.n)
    x, y = z[:, 0], z[:, 1]
    fields = [
        (ones, zeros),
        (zeros, ones),
        (x, zeros),
        (y, zeros),
        (zeros, x),
        (zeros, y),
    ]
    return np.column_stack([np.column_stack(pair).reshape(-1) for pair in fields])


@dataclass(frozen=True)
class DeformationSpace:
    dimension: int
    basis: NDArray[np.float64] = field(repr=False)
    affine_count: int
    non_affine: NDArray[np.float64] | None = field(repr=False)


def deformation_space(polygon: Polygon, n: int, *, tol: float = 1e-8, residual_tol: float = 1e-10) -> DeformationSpace:
    residuals = parallel_residuals(polygon, n)
    scale = polygon.diameter()
    if np.max(np.abs(residuals)) > residual_tol * scale**2:
        raise InvalidParameterError(f"平行条件が満たされていません: 最大残差={np.max(np.abs(residuals)):.3e}")
    basis = null_space(parallel_jacobian(polygon, n), rcond=tol)
    generators = affine_generators(polygon)
    generators = generators / np.linalg.norm(generators, axis=0)
    inside = np.linalg.norm(generators - basis @ (basis.T @ generators), axis=0) < tol
    affine_count = int(np.linalg.matrix_rank(generators[:, inside], tol=tol)) if inside.any() else 0
    # アフィン部分の直交補空間で最大の成分をもつ方向
    q, _ = np.linalg.qr(generators)
    remainder = basis - q @ (q.T @ basis)
    u, s, _ = np.linalg.svd(remainder, full_matrices=False)
    non_affine = u[:, 0] if s.size and s[0] > tol else None
    logger.debug(f"変形空間: 次元={basis.shape[1]}, アフィン={affine_count}")
    return DeformationSpace(dimension=basis.shape[1], basis=basis, affine_count=affine_count, non_affine=non_affine)


def project_to_parallel(polygon: Polygon, n: int, *, tol: float = 1e-12, max_iter: int = 50) -> Polygon:
    """Gauss-Newton (最小ノルム解) で平行条件の集合に射影する。"""
    scale = polygon.diameter()
    z = polygon.vertices.reshape(-1).copy()
    history: list[float] = []
    for iteration in range(max_iter + 1):
        current = Polygon(z.reshape(-1, 2))
        residuals = parallel_residuals(current, n)
        norm = float(np.max(np.abs(residuals)))
        history.append(norm)
        on_solver_iteration.notify(IterationEvent("parallel", iteration, norm))
        if norm < tol * scale**2:
            return current
        step, *_ = np.linalg.lstsq(parallel_jacobian(current, n), -residuals, rcond=None)
        z = z + step
    raise NonConvergenceError(f"平行条件への射影が収束しませんでした: 残差={history[-1]:.3e}", history)


def deformed_polygon(polygon: Polygon, n: int, step: float = 1e-3) -> Polygon:
    space = deformation_space(polygon, n)
    if space.non_affine is None:
        raise InvalidParameterError("アフィンでない変形方向がありません")
    moved = Polygon(polygon.vertices + step * polygon.diameter() * space.non_affine.reshape(-1, 2))
    return project_to_parallel(moved, n)


def rotation_start(n: int) -> tuple[int, int, int]:
    # 正 (3n+1) 角形での初期三角形 (0始まり): A=z_0, B=z_{n+1}, C=z_{2n+1}
    return 0, n + 1, 2 * n + 1
