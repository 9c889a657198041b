"""テーブル・多角形・曲線の JSON スキーマ。

テーブルは ``kind`` で判別する。入力の検証は pydantic に任せ、検証に通ったものだけを
ドメインオブジェクトへ変換する。
"""
from __future__ import annotations

import json
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, TypeAdapter, ValidationError

from src.errors import ConfigError, InvalidCurveError, InvalidPolygonError, InvalidTableError
from src.geometry import Polygon
from src.table import AffineTable, Arc, ConvexTable, PiecewiseArcsTable, SplineSupportTable, SupportFourierTable
from src.triangle import MAX_FREQUENCY, EquivariantCurve
from src.util import TextDataSource

Point = tuple[float, float]


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CircleSpec(_Spec):
    kind: Literal["circle"] = "circle"
    radius: PositiveFloat = 1.0
    center: Point = (0.0, 0.0)


class SupportFourierSpec(_Spec):
    kind: Literal["support_fourier"] = "support_fourier"
    h0: float
    coeffs: list[Point] = []


class SplineSpec(_Spec):
    kind: Literal["support_spline"] = "support_spline"
    thetas: list[float] = Field(min_length=8)
    values: list[float] = Field(min_length=8)


class ArcSpec(_Spec):
    center: Point
    radius: NonNegativeFloat
    theta_start: float
    theta_end: float


class PiecewiseSpec(_Spec):
    kind: Literal["piecewise"] = "piecewise"
    pieces: list[ArcSpec] = Field(min_length=2)


class AffineSpec(_Spec):
    kind: Literal["affine"] = "affine"
    base: TableSpec
    matrix: tuple[Point, Point]
    offset: Point = (0.0, 0.0)


TableSpec = Annotated[
    CircleSpec | SupportFourierSpec | SplineSpec | PiecewiseSpec | AffineSpec,
    Field(discriminator="kind"),
]

AffineSpec.model_rebuild()

table_adapter: TypeAdapter[TableSpec] = TypeAdapter(TableSpec)


class PolygonSpec(_Spec):
    vertices: list[Point] = Field(min_length=3)


class TermSpec(_Spec):
    m: int
    re: float = 0.0
    im: float = 0.0


class CurveSpec(_Spec):
    max_frequency: int = Field(default=MAX_FREQUENCY, ge=1)
    terms: list[TermSpec] = Field(min_length=1)


def table_from_spec(spec: TableSpec) -> ConvexTable:
    match spec:
        case CircleSpec(radius=radius, center=center):
            return SupportFourierTable.circle(radius, center)
        case SupportFourierSpec(h0=h0, coeffs=coeffs):
            return SupportFourierTable(h0, np.asarray(coeffs, dtype=float).reshape(-1, 2))
        case SplineSpec(thetas=thetas, values=values):
            return SplineSupportTable(np.asarray(thetas), np.asarray(values))
        case PiecewiseSpec(pieces=pieces):
            arcs = tuple(Arc(np.asarray(p.center), p.radius, p.theta_start, p.theta_end) for p in pieces)
            return PiecewiseArcsTable(arcs)
        case AffineSpec(base=base, matrix=matrix, offset=offset):
            return AffineTable(table_from_spec(base), matrix, offset)
    raise InvalidTableError(f"未対応のテーブル種別です: {spec!r}")


def table_to_spec(table: ConvexTable) -> TableSpec:
    match table:
        case SupportFourierTable():
            return SupportFourierSpec(h0=table.h0, coeffs=[tuple(c) for c in table.coefficients.tolist()])
        case SplineSupportTable():
            return SplineSpec(thetas=table.thetas.tolist(), values=table.values.tolist())
        case PiecewiseArcsTable():
            pieces = [
                ArcSpec(center=tuple(np.asarray(a.center).tolist()), radius=a.radius, theta_start=a.theta_start, theta_end=a.theta_end)
                for a in table.arcs
            ]
            return PiecewiseSpec(pieces=pieces)
        case AffineTable():
            return AffineSpec(
                base=table_to_spec(table.base),
                matrix=tuple(tuple(row) for row in table.matrix.tolist()),
                offset=tuple(table.offset.tolist()),
            )
    raise InvalidTableError(f"JSON に変換できないテーブルです: {type(table).__name__}")


def table_to_json(table: ConvexTable) -> dict[str, object]:
    return table_to_spec(table).model_dump(mode="json")


def polygon_from_spec(spec: PolygonSpec) -> Polygon:
    return Polygon.from_points(spec.vertices)


def curve_from_spec(spec: CurveSpec) -> EquivariantCurve:
    terms: dict[int, complex] = {}
    for term in spec.terms:
        if term.m in terms:
            raise InvalidCurveError(f"周波数 {term.m} が重複しています")
        terms[term.m] = complex(term.re, term.im)
    return EquivariantCurve.from_terms(terms, spec.max_frequency)


def _read(data_source: TextDataSource) -> str:
    with data_source.open_stream() as stream:
        return stream.read()


def load_table(data_source: TextDataSource) -> ConvexTable:
    try:
        return table_from_spec(table_adapter.validate_json(_read(data_source)))
    except (ValidationError, InvalidTableError) as e:
        raise ConfigError(f"テーブルの JSON が不正です: {e}") from e


def load_polygon(data_source: TextDataSource) -> Polygon:
    try:
        return polygon_from_spec(PolygonSpec.model_validate_json(_read(data_source)))
    except (ValidationError, InvalidPolygonError) as e:
        raise ConfigError(f"多角形の JSON が不正です: {e}") from e


def load_curve(data_source: TextDataSource) -> EquivariantCurve:
    try:
        return curve_from_spec(CurveSpec.model_validate_json(_read(data_source)))
    except (ValidationError, InvalidCurveError) as e:
        raise ConfigError(f"曲線の JSON が不正です: {e}") from e


def dump_table(table: ConvexTable) -> str:
    return json.dumps(table_to_json(table), sort_keys=True, indent=2)
