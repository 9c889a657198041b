"""3周期軌道の族を SL(2,R) に値をとる Z_3 同変な閉曲線から構成する。

ū(t) = Σ c_m e^{imt} (m ≢ 0 mod 3) を複素数として平面に埋め込み、
u = s ū, v = s ū(t + 2π/3), s = [ū(t), ū(t + 2π/3)]^{-1/2} とおくと [u, v] = 1 かつ
u(t + 2π/3) = v(t), v(t + 2π/3) = −u(t) − v(t) が成り立つ。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Self

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from src.errors import GeometricDegeneracyError, InvalidCurveError, InvalidParameterError, NonConvergenceError, NotClosedError
from src.geometry import Polygon, cross, is_convex_curve
from src.table import ConvexTable, SupportSamples, fit_support_fourier, outer_map, spline_support_table
from src.util import IterationEvent, on_solver_iteration

logger = logging.getLogger(__name__)

MAX_FREQUENCY = 8
QUADRATURE_POINTS = 4096
OMEGA = np.exp(2j * np.pi / 3.0)

# Newton の未知数 (周波数, 実部/虚部)
type CoefficientSlot = tuple[int, str]
DEFAULT_FREE_SLOTS: tuple[CoefficientSlot, CoefficientSlot] = ((2, "re"), (2, "im"))


def _as_plane(z: NDArray[np.complex128]) -> NDArray[np.float64]:
    return np.stack([z.real, z.imag], axis=-1)


def _ccross(a: NDArray[np.complex128], b: NDArray[np.complex128]) -> NDArray[np.float64]:
    return (np.conj(a) * b).imag


def quadrature_grid(points: int = QUADRATURE_POINTS) -> NDArray[np.float64]:
    return np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)


@dataclass(frozen=True)
class CurveSample:
    t: NDArray[np.float64]
    u: NDArray[np.float64]
    v: NDArray[np.float64]
    du: NDArray[np.float64]
    dv: NDArray[np.float64]
    scale: NDArray[np.float64]

    @property
    def p(self) -> NDArray[np.float64]:
        return cross(self.u, self.du)

    @property
    def q(self) -> NDArray[np.float64]:
        return cross(self.v, self.dv)

    @property
    def r(self) -> NDArray[np.float64]:
        return cross(self.du, self.v)

    def centroid_velocity(self) -> NDArray[np.float64]:
        # c′ = ⅓(p − 2q + 2r) v − ⅓(q − 2p + 2r) u
        p, q, r = self.p, self.q, self.r
        return ((p - 2.0 * q + 2.0 * r) / 3.0)[:, None] * self.v - ((q - 2.0 * p + 2.0 * r) / 3.0)[:, None] * self.u


@dataclass(frozen=True)
class EquivariantCurve:
    frequencies: tuple[int, ...]
    coefficients: NDArray[np.complex128] = field(repr=False)
    max_frequency: int = MAX_FREQUENCY

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=complex).reshape(-1)
        frequencies = tuple(int(m) for m in self.frequencies)
        if len(frequencies) != coefficients.size or len(set(frequencies)) != len(frequencies):
            raise InvalidCurveError("周波数と係数の数が一致しないか、周波数が重複しています")
        for m in frequencies:
            if m % 3 == 0:
                raise InvalidCurveError(f"周波数 {m} は 3 の倍数であってはなりません")
            if abs(m) > self.max_frequency:
                raise InvalidCurveError(f"周波数 {m} が上限 {self.max_frequency} を超えています")
        coefficients.setflags(write=False)
        object.__setattr__(self, "frequencies", frequencies)
        object.__setattr__(self, "coefficients", coefficients)
        orientation = self.orientation(quadrature_grid())
        if np.min(orientation) <= 0.0:
            index = int(np.argmin(orientation))
            raise InvalidCurveError(
                f"[ū(t), ū(t+2π/3)] が正ではありません: t={quadrature_grid()[index]:.6f}, 値={orientation[index]:.3e}"
            )

    @classmethod
    def from_terms(cls, terms: Mapping[int, complex], max_frequency: int = MAX_FREQUENCY) -> Self:
        items = sorted((int(m), complex(c)) for m, c in terms.items() if c != 0)
        return cls(tuple(m for m, _ in items), np.array([c for _, c in items], dtype=complex), max_frequency)

    @classmethod
    def circle(cls) -> Self:
        return cls.from_terms({1: 1.0})

    def terms(self) -> dict[int, complex]:
        return {m: complex(c) for m, c in zip(self.frequencies, self.coefficients)}

    def coefficient(self, m: int) -> complex:
        return self.terms().get(m, 0j)

    def with_terms(self, updates: Mapping[int, complex]) -> EquivariantCurve:
        terms = self.terms()
        terms.update(updates)
        return EquivariantCurve.from_terms(terms, self.max_frequency)

    def _series(self, t: NDArray[np.float64], shift: int, derivative: bool) -> NDArray[np.complex128]:
        m = np.array(self.frequencies, dtype=float)
        weights = self.coefficients * OMEGA ** (shift * np.array(self.frequencies))
        if derivative:
            weights = weights * 1j * m
        return np.exp(1j * np.multiply.outer(t, m)) @ weights

    def orientation(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return _ccross(self._series(t, 0, False), self._series(t, 1, False))

    def sample(self, t: ArrayLike) -> CurveSample:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ubar, vbar = self._series(t, 0, False), self._series(t, 1, False)
        dubar, dvbar = self._series(t, 0, True), self._series(t, 1, True)
        det = _ccross(ubar, vbar)
        if np.min(det) <= 0.0:
            raise InvalidCurveError("曲線の向きが正ではありません")
        d_det = _ccross(dubar, vbar) + _ccross(ubar, dvbar)
        s = det**-0.5
        ds = -0.5 * det**-1.5 * d_det
        return CurveSample(
            t=t,
            u=_as_plane(s * ubar),
            v=_as_plane(s * vbar),
            du=_as_plane(ds * ubar + s * dubar),
            dv=_as_plane(ds * vbar + s * dvbar),
            scale=s,
        )

    def to_json(self) -> dict[str, object]:
        return {
            "max_frequency": self.max_frequency,
            "terms": [{"m": m, "re": c.real, "im": c.imag} for m, c in self.terms().items()],
        }


def pqr(curve: EquivariantCurve, t: float) -> tuple[float, float, float]:
    sample = curve.sample(t)
    return float(sample.p[0]), float(sample.q[0]), float(sample.r[0])


def centroid_velocity(curve: EquivariantCurve, t: float) -> NDArray[np.float64]:
    return curve.sample(t).centroid_velocity()[0]


@dataclass(frozen=True)
class MonodromyResidual3:
    mon3: NDArray[np.float64]
    mon2: NDArray[np.float64]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.mon3))

    @property
    def agreement(self) -> float:
        # mon2 の積分は mon3 の 3 倍
        return float(np.linalg.norm(self.mon2 / 3.0 - self.mon3))


def _periodic_integral(values: NDArray[np.float64]) -> NDArray[np.float64]:
    # 一様格子上の周期関数の台形則
    return 2.0 * np.pi * values.mean(axis=0)


def monodromy_residual3(curve: EquivariantCurve, points: int = QUADRATURE_POINTS) -> MonodromyResidual3:
    sample = curve.sample(quadrature_grid(points))
    p, q, r = sample.p[:, None], sample.q[:, None], sample.r[:, None]
    mon3 = _periodic_integral(r * (sample.v - sample.u))
    mon2 = _periodic_integral((p - 2.0 * q + 2.0 * r) * sample.v - (q - 2.0 * p + 2.0 * r) * sample.u)
    return MonodromyResidual3(mon3=mon3, mon2=mon2)


def integral_identities(curve: EquivariantCurve, points: int = QUADRATURE_POINTS) -> dict[str, float]:
    """Z_3 作用の不変性から従う4つの積分恒等式の誤差。"""
    sample = curve.sample(quadrature_grid(points))
    p, q, r = sample.p[:, None], sample.q[:, None], sample.r[:, None]
    u, v = sample.u, sample.v
    qu, rv = _periodic_integral(q * u), _periodic_integral(r * v)
    pv, ru = _periodic_integral(p * v), _periodic_integral(r * u)
    qv, pu = _periodic_integral(q * v), _periodic_integral(p * u)
    return {
        "qu+rv": float(np.linalg.norm(qu + rv)),
        "pv+ru": float(np.linalg.norm(pv + ru)),
        "qv-pu": float(np.linalg.norm(qv - pu)),
        "pu-ru-rv": float(np.linalg.norm(pu - ru - rv)),
    }


def centroid_drift(curve: EquivariantCurve, points: int = QUADRATURE_POINTS) -> NDArray[np.float64]:
    # c(2π) − c(0)、閉じた格子上の台形則
    t = np.linspace(0.0, 2.0 * np.pi, points + 1)
    return trapezoid(curve.sample(t).centroid_velocity(), t, axis=0)


def _apply_slot(curve: EquivariantCurve, slot: CoefficientSlot, value: float) -> EquivariantCurve:
    m, part = slot
    current = curve.coefficient(m)
    updated = complex(value, current.imag) if part == "re" else complex(current.real, value)
    return curve.with_terms({m: updated})


def _slot_value(curve: EquivariantCurve, slot: CoefficientSlot) -> float:
    m, part = slot
    current = curve.coefficient(m)
    return current.real if part == "re" else current.imag


def _with_values(
    curve: EquivariantCurve, slots: tuple[CoefficientSlot, CoefficientSlot], values: NDArray[np.float64]
) -> EquivariantCurve:
    for slot, value in zip(slots, values):
        curve = _apply_slot(curve, slot, float(value))
    return curve


@dataclass(frozen=True)
class Monodromy3Solution:
    curve: EquivariantCurve
    history: tuple[float, ...]
    jacobian_condition: float


def solve_monodromy3(
    curve: EquivariantCurve,
    free: tuple[CoefficientSlot, CoefficientSlot] = DEFAULT_FREE_SLOTS,
    *,
    tol: float = 1e-10,
    max_iter: int = 50,
    fd_step: float = 1e-7,
    points: int = QUADRATURE_POINTS,
) -> Monodromy3Solution:
    for m, part in free:
        if m % 3 == 0 or abs(m) > curve.max_frequency or part not in ("re", "im"):
            raise InvalidCurveError(f"自由係数の指定が不正です: {(m, part)}")

    def residual(values: NDArray[np.float64]) -> NDArray[np.float64]:
        return monodromy_residual3(_with_values(curve, free, values), points).mon3

    values = np.array([_slot_value(curve, slot) for slot in free])
    history: list[float] = []
    condition = float("nan")
    for iteration in range(max_iter + 1):
        current = residual(values)
        norm = float(np.linalg.norm(current))
        history.append(norm)
        on_solver_iteration.notify(IterationEvent("monodromy3", iteration, norm))
        if norm < tol:
            solved = _with_values(curve, free, values)
            logger.info(f"モノドロミー方程式が収束しました: 反復={iteration}, 残差={norm:.3e}")
            return Monodromy3Solution(curve=solved, history=tuple(history), jacobian_condition=condition)
        if iteration == max_iter:
            break
        jacobian = np.empty((2, 2))
        for j in range(2):
            bumped = values.copy()
            bumped[j] += fd_step
            jacobian[:, j] = (residual(bumped) - current) / fd_step
        if iteration == 0:
            condition = float(np.linalg.cond(jacobian))
            if condition > 1e10:
                logger.warning(f"自由係数がモノドロミー残差に横断的に作用していません: 条件数={condition:.3e}")
        values = values + np.linalg.lstsq(jacobian, -current, rcond=None)[0]
    raise NonConvergenceError(f"モノドロミー方程式が {max_iter} 回で収束しませんでした: 残差={history[-1]:.3e}", history)


def seeded_curve(rng: np.random.Generator, norm: float = 0.05, frequencies: tuple[int, ...] = (-1, -2)) -> EquivariantCurve:
    raw = rng.normal(size=len(frequencies)) + 1j * rng.normal(size=len(frequencies))
    raw *= norm / np.linalg.norm(raw)
    return EquivariantCurve.circle().with_terms(dict(zip(frequencies, raw)))


@dataclass(frozen=True)
class TriangleFamily:
    curve: EquivariantCurve
    t: NDArray[np.float64] = field(repr=False)
    centroid: NDArray[np.float64] = field(repr=False)
    # vertices[j, i] = w_{i+1}(t_j)、tangents は各頂点の速度
    vertices: NDArray[np.float64] = field(repr=False)
    tangents: NDArray[np.float64] = field(repr=False)
    convex: bool

    @property
    def traced(self) -> NDArray[np.float64]:
        return self.vertices[:, 0]

    def triangle(self, index: int) -> Polygon:
        return Polygon(self.vertices[index])

    def support_samples(self) -> SupportSamples:
        return SupportSamples.from_tangent_lines(self.traced, self.tangents[:, 0])


def _spectral_antiderivative(values: NDArray[np.float64]) -> NDArray[np.float64]:
    # 平均0の周期関数の原始関数 (平均0に正規化)
    count = values.shape[0]
    spectrum = np.fft.fft(values, axis=0)
    k = np.fft.fftfreq(count, d=1.0 / count)
    factor = np.zeros(count, dtype=complex)
    factor[k != 0] = 1.0 / (1j * k[k != 0])
    return np.fft.ifft(spectrum * factor[:, None], axis=0).real


def build_family(curve: EquivariantCurve, *, points: int = QUADRATURE_POINTS, tol: float = 1e-10) -> TriangleFamily:
    residual = monodromy_residual3(curve, points)
    if residual.norm > tol:
        raise NotClosedError(f"モノドロミー条件が満たされていません: 残差={residual.norm:.3e}", residual.norm)
    t = quadrature_grid(points)
    sample = curve.sample(t)
    dc = sample.centroid_velocity()
    c = _spectral_antiderivative(dc)
    u, v, du, dv = sample.u, sample.v, sample.du, sample.dv
    vertices = np.stack([u + c, v + c, -u - v + c], axis=1)
    tangents = np.stack([du + dc, dv + dc, -du - dv + dc], axis=1)
    family = TriangleFamily(
        curve=curve,
        t=t,
        centroid=c,
        vertices=vertices,
        tangents=tangents,
        convex=is_convex_curve(vertices[:, 0]),
    )
    logger.debug(f"三角形の族を構成しました: 点数={points}, 凸={family.convex}")
    return family


def _intersect(p: NDArray[np.float64], d: NDArray[np.float64], q: NDArray[np.float64], e: NDArray[np.float64]) -> NDArray[np.float64]:
    det = float(cross(d, e))
    if abs(det) < 1e-12 * float(np.linalg.norm(d) * np.linalg.norm(e)):
        raise GeometricDegeneracyError("接線がほぼ平行で交点が定まりません")
    return p + float(cross(q - p, e)) / det * d


def circumscribed_orbit(family: TriangleFamily, index: int, *, tol: float = 1e-8) -> Polygon:
    """index 番目の内接三角形の頂点での接線がなす外接三角形。

    各辺の中点が対応する内接三角形の頂点に一致しない (ずれが tol × 直径以上) ときは NonConvergenceError。
    """
    if not family.convex:
        raise InvalidParameterError("族のたどる曲線が凸ではありません")
    # z1 = L3 ∩ L1, z2 = L1 ∩ L2, z3 = L2 ∩ L3 (L_i は w_i での接線)
    w, d = family.vertices[index], family.tangents[index]
    z1 = _intersect(w[2], d[2], w[0], d[0])
    z2 = _intersect(w[0], d[0], w[1], d[1])
    z3 = _intersect(w[1], d[1], w[2], d[2])
    orbit = Polygon(np.array([z1, z2, z3]))
    mids = 0.5 * (orbit.vertices + np.roll(orbit.vertices, -1, axis=0))
    offset = float(np.max(np.linalg.norm(mids - w, axis=1)))
    if offset >= tol * orbit.diameter():
        raise NonConvergenceError(f"外接三角形の辺の中点が内接三角形の頂点からずれています: {offset:.3e}", [offset])
    return orbit


@dataclass(frozen=True)
class TriangleVerification:
    closure_max: float
    midpoint_max: float
    area_spread: float
    area_ratio: float
    table: ConvexTable = field(repr=False)


def table_area_ratio(family: TriangleFamily) -> float:
    # 内接三角形の面積 / テーブルの面積
    # テーブルの面積 ½∮ w × w′ dt
    table_area = np.pi * float(np.mean(cross(family.traced, family.tangents[:, 0])))
    triangle_area = 0.5 * float(np.mean(cross(family.vertices[:, 1] - family.vertices[:, 0], family.vertices[:, 2] - family.vertices[:, 0])))
    return triangle_area / table_area


def verify_family(
    family: TriangleFamily,
    samples: int = 12,
    *,
    representation: str = "fourier",
    harmonics: int = 24,
    fit_tol: float = 1e-6,
) -> TriangleVerification:
    table_samples = family.support_samples()
    if representation == "fourier":
        table = fit_support_fourier(table_samples, harmonics, tol=fit_tol)
    else:
        table = spline_support_table(table_samples)
    closure = 0.0
    midpoint = 0.0
    for index in np.linspace(0, family.t.size, samples, endpoint=False).astype(int):
        orbit = circumscribed_orbit(family, int(index))
        z = orbit.vertices
        mids = 0.5 * (z + np.roll(z, -1, axis=0))
        midpoint = max(midpoint, float(np.max(np.linalg.norm(mids - family.vertices[index], axis=1))))
        x = z[0]
        y = x
        for _ in range(3):
            y = outer_map(table, y)
        closure = max(closure, float(np.linalg.norm(y - x)))
    w = family.vertices
    areas = cross(w[:, 1] - w[:, 0], w[:, 2] - w[:, 0])
    return TriangleVerification(
        closure_max=closure,
        midpoint_max=midpoint,
        area_spread=float(np.max(areas) - np.min(areas)),
        area_ratio=table_area_ratio(family),
        table=table,
    )
