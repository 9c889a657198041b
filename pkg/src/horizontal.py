from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import gcd
from typing import Literal, Self

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import null_space

from src.birkhoff import field_velocities, area_gradient, frame_matrix
from src.errors import (
    DegenerationAlongPathError,
    InvalidParameterError,
    InvalidTableError,
    NonConvergenceError,
    NotClosedError,
)
from src.geometry import Polygon, area2, cross, cyclic_shift, is_convex_curve, require_nondegenerate, rot90, unit
from src.table import (
    ConvexTable,
    SupportSamples,
    fit_support_fourier,
    outer_map,
    spline_support_table,
)
from src.util import IterationEvent, Timer, on_solver_iteration

logger = logging.getLogger(__name__)

WINDOW_CENTER = 0.5
WINDOW_HALF_WIDTH = 0.45
DEFAULT_HARMONICS = 4


def window(t: ArrayLike) -> NDArray[np.float64]:
    """t ∈ [0.05, 0.95] に台を持つ滑らかな隆起関数。端点の近くでは恒等的に0。"""
    s = (np.asarray(t, dtype=float) - WINDOW_CENTER) / WINDOW_HALF_WIDTH
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)


@dataclass(frozen=True)
class ControlSignal:
    # c_k(t) = base_k + ψ(t) Σ_m p_{k,m} sin(mπt)
    base: NDArray[np.float64]
    perturbation: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        base = np.array(self.base, dtype=float).reshape(-1)
        if self.perturbation is None:
            perturbation = np.zeros((base.size, DEFAULT_HARMONICS))
        else:
            perturbation = np.array(self.perturbation, dtype=float)
        if perturbation.ndim != 2 or perturbation.shape[0] != base.size:
            raise InvalidParameterError(f"摂動係数の形状が不正です: {perturbation.shape}")
        base.setflags(write=False)
        perturbation.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "perturbation", perturbation)

    @classmethod
    def constant(cls, values: ArrayLike, harmonics: int = DEFAULT_HARMONICS) -> Self:
        base = np.asarray(values, dtype=float).reshape(-1)
        return cls(base, np.zeros((base.size, harmonics)))

    @property
    def n(self) -> int:
        return self.base.size

    @property
    def harmonics(self) -> int:
        return self.perturbation.shape[1]

    def __call__(self, t: float) -> NDArray[np.float64]:
        m = np.arange(1, self.harmonics + 1)
        return self.base + float(window(t)) * (self.perturbation @ np.sin(m * np.pi * t))

    def with_perturbation(self, perturbation: ArrayLike) -> ControlSignal:
        return ControlSignal(self.base, perturbation)

    def to_json(self) -> dict[str, list]:
        return {"base": self.base.tolist(), "perturbation": self.perturbation.tolist()}


@dataclass(frozen=True)
class HorizontalPath:
    start: Polygon
    controls: ControlSignal
    samples: NDArray[np.float64] = field(repr=False)
    shift: int = 1

    @property
    def steps(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def times(self) -> NDArray[np.float64]:
        return np.linspace(0.0, 1.0, self.steps + 1)

    @property
    def end(self) -> Polygon:
        return Polygon(self.samples[-1])

    def polygon(self, index: int) -> Polygon:
        return Polygon(self.samples[index])

    def velocity(self, index: int) -> NDArray[np.float64]:
        return _velocity(self.samples[index], self.controls(float(self.times[index])))


def _velocity(z: NDArray[np.float64], c: NDArray[np.float64]) -> NDArray[np.float64]:
    # Z′ = Σ_k c_k W_k(Z)
    e = np.roll(z, -1, axis=0) - z
    a = cross(np.roll(e, 1, axis=0), e)
    result = np.zeros_like(z)
    for k in range(z.shape[0]):
        if c[k] != 0.0:
            result += c[k] * field_velocities(z, a, k)
    return result


def integrate(
    start: Polygon,
    controls: ControlSignal,
    steps: int = 800,
    *,
    shift: int = 1,
    tol: float = 1e-10,
) -> HorizontalPath:
    """Z′ = Σ c_k(t) W_k(Z) を古典的4次ルンゲ・クッタで N 等分積分する。"""
    require_nondegenerate(start, tol)
    if controls.n != start.n:
        raise InvalidParameterError(f"制御の数 {controls.n} が頂点数 {start.n} と一致しません")
    threshold = tol * start.diameter() ** 2
    dt = 1.0 / steps
    samples = np.empty((steps + 1, start.n, 2))
    z = start.vertices.copy()
    samples[0] = z
    for i in range(steps):
        t = i * dt
        c0, c_half, c1 = controls(t), controls(t + 0.5 * dt), controls(t + dt)
        k1 = _velocity(z, c0)
        k2 = _velocity(z + 0.5 * dt * k1, c_half)
        k3 = _velocity(z + 0.5 * dt * k2, c_half)
        k4 = _velocity(z + dt * k3, c1)
        z = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        e = np.roll(z, -1, axis=0) - z
        if np.min(np.abs(cross(np.roll(e, 1, axis=0), e))) < threshold:
            raise DegenerationAlongPathError(f"経路が t={t + dt:.6f} で退化しました", t + dt)
        samples[i + 1] = z
    return HorizontalPath(start=start, controls=controls, samples=samples, shift=shift)


def monodromy_shift(n: int, k: int) -> int:
    # z_j(t) = e^{2πi(jk+t)/n} では Z(1) = σ^s Z(0)、s = k^{-1} mod n
    if gcd(n, k) != 1:
        raise InvalidParameterError(f"n と k は互いに素である必要があります: n={n}, k={k}")
    return pow(k, -1, n)


def circle_baseline(n: int, k: int = 1, *, harmonics: int = DEFAULT_HARMONICS) -> tuple[Polygon, ControlSignal]:
    if n < 3 or not 1 <= k <= n // 2:
        raise InvalidParameterError(f"(n, k) の範囲が不正です: n={n}, k={k}")
    monodromy_shift(n, k)
    start = Polygon.regular(n, k=k)
    velocity = (2.0 * np.pi / n) * rot90(start.vertices)
    matrix = frame_matrix(start)
    solution, *_ = np.linalg.lstsq(matrix, velocity.reshape(-1), rcond=None)
    residual = float(np.linalg.norm(matrix @ solution - velocity.reshape(-1)))
    if residual > 1e-12 * max(1.0, float(np.linalg.norm(velocity))):
        raise InvalidParameterError(f"円の族の速度が分布に含まれません: 残差={residual:.3e}")
    return start, ControlSignal.constant(solution, harmonics)


def monodromy_residual(path: HorizontalPath) -> NDArray[np.float64]:
    target = cyclic_shift(path.start, path.shift).vertices
    return (path.samples[-1] - target).reshape(-1)


def shoot_slots(n: int) -> list[tuple[int, int]]:
    # Newton の未知数: 全 k の m=1 係数と k < n-1 の m=2 係数 (計 2n-1 個)、添字 m は 0 始まり
    return [(k, 0) for k in range(n)] + [(k, 1) for k in range(n - 1)]


@dataclass(frozen=True)
class ShootResult:
    controls: ControlSignal
    path: HorizontalPath
    history: tuple[float, ...]

    @property
    def iterations(self) -> int:
        return len(self.history) - 1

    @property
    def residual(self) -> float:
        return self.history[-1]


def shoot(
    n: int,
    k: int = 1,
    seed: ArrayLike | None = None,
    *,
    max_iter: int = 30,
    steps: int = 800,
    tol: float = 1e-8,
    fd_step: float = 1e-7,
    degeneracy_tol: float = 1e-10,
) -> ShootResult:
    """円の族に seed の摂動を加え、2n-1 個の係数についての Newton 法でモノドロミー条件を満たす制御を求める。

    残差は面積勾配の直交補空間に射影する。
    seed のその他の係数は固定され、解の族の関数的な自由度を表す。
    """
    start, baseline = circle_baseline(n, k)
    shift = monodromy_shift(n, k)
    perturbation = np.zeros_like(baseline.perturbation)
    if seed is not None:
        seed = np.asarray(seed, dtype=float)
        perturbation[:, : seed.shape[1]] = seed
    slots = shoot_slots(n)
    target = cyclic_shift(start, shift)
    basis = null_space(area_gradient(target)[None, :])
    scale = start.diameter()

    def evaluate(unknowns: NDArray[np.float64]) -> tuple[HorizontalPath, NDArray[np.float64]]:
        trial = perturbation.copy()
        for (row, col), value in zip(slots, unknowns):
            trial[row, col] = value
        path = integrate(start, baseline.with_perturbation(trial), steps, shift=shift, tol=degeneracy_tol)
        return path, monodromy_residual(path)

    unknowns = np.array([perturbation[row, col] for row, col in slots])
    history: list[float] = []
    with Timer() as elapsed:
        for iteration in range(max_iter + 1):
            path, residual = evaluate(unknowns)
            norm = float(np.linalg.norm(residual))
            history.append(norm)
            on_solver_iteration.notify(IterationEvent("shoot", iteration, norm))
            if norm < tol * scale:
                logger.info(f"シューティング収束: (n,k)=({n},{k}), 反復={iteration}, 残差={norm:.3e}, {elapsed():.2f}秒")
                return ShootResult(controls=path.controls, path=path, history=tuple(history))
            if iteration == max_iter:
                break
            projected = basis.T @ residual
            jacobian = np.empty((basis.shape[1], unknowns.size))
            for j in range(unknowns.size):
                bumped = unknowns.copy()
                bumped[j] += fd_step
                _, shifted = evaluate(bumped)
                jacobian[:, j] = (basis.T @ shifted - projected) / fd_step
            step, *_ = np.linalg.lstsq(jacobian, -projected, rcond=None)
            unknowns = unknowns + step
    raise NonConvergenceError(f"シューティングが {max_iter} 回で収束しませんでした: 残差={history[-1]:.3e}", history)


@dataclass(frozen=True)
class ReconstructedTable:
    # 中点曲線: 辺 i0 = 0, s, 2s, ... の中点軌跡を順につないだ閉曲線
    points: NDArray[np.float64] = field(repr=False)
    samples: SupportSamples = field(repr=False)
    convex: bool
    closure_residual: float


def reconstruct_table(path: HorizontalPath, *, tol: float = 1e-6) -> ReconstructedTable:
    residual = float(np.linalg.norm(monodromy_residual(path)))
    scale = path.start.diameter()
    if residual > tol * scale:
        raise NotClosedError(f"経路が閉じていません: モノドロミー残差={residual:.3e}", residual)
    n = path.start.n
    z = path.samples[:-1]
    following = np.roll(z, -1, axis=1)
    midpoints = 0.5 * (z + following)
    directions = following - z
    order = [(j * path.shift) % n for j in range(n)]
    points = np.concatenate([midpoints[:, i] for i in order])
    tangents = np.concatenate([directions[:, i] for i in order])
    return ReconstructedTable(
        points=points,
        samples=SupportSamples.from_tangent_lines(points, tangents),
        convex=is_convex_curve(points),
        closure_residual=residual,
    )


@dataclass(frozen=True)
class PeriodicFamilyReport:
    representation: str
    closure_max: float
    area_spread: float
    checked: int
    table: ConvexTable = field(repr=False)


def verify_periodic_family(
    reconstructed: ReconstructedTable,
    path: HorizontalPath,
    samples: int = 16,
    *,
    representation: Literal["fourier", "spline"] = "fourier",
    harmonics: int = 24,
    fit_tol: float = 1e-6,
) -> PeriodicFamilyReport:
    if not reconstructed.convex:
        raise InvalidTableError("包絡線が凸ではないためテーブルを構成できません")
    if representation == "fourier":
        table = fit_support_fourier(reconstructed.samples, harmonics, tol=fit_tol)
    else:
        table = spline_support_table(reconstructed.samples)
    n = path.start.n
    indices = np.linspace(0, path.steps, samples, endpoint=False).astype(int)
    closure = 0.0
    for index in indices:
        x = path.samples[index, 0]
        y = x
        for _ in range(n):
            y = outer_map(table, y)
        closure = max(closure, float(np.linalg.norm(y - x)))
    areas = np.array([area2(path.polygon(i)) for i in range(path.steps + 1)])
    report = PeriodicFamilyReport(
        representation=representation,
        closure_max=closure,
        area_spread=float(np.max(areas) - np.min(areas)),
        checked=int(indices.size),
        table=table,
    )
    logger.info(f"周期族の検証 ({representation}): 最大閉合誤差={report.closure_max:.3e}, 面積の幅={report.area_spread:.3e}")
    return report


def midpoint_circle_radius(n: int, k: int) -> float:
    return float(np.cos(np.pi * k / n))


def circle_baseline_constant(n: int, k: int = 1) -> float:
    # c* = π / (n a sin(2πk/n))、a は正 n 角形 (頂点は単位円上) の a_i
    angle = 2.0 * np.pi * k / n
    a = float(cross(unit(angle) - unit(0.0), unit(2 * angle) - unit(angle)))
    return np.pi / (n * a * np.sin(angle))
