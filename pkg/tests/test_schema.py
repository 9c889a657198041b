import json

import numpy as np
import pytest

from src.errors import ConfigError, InvalidTableError
from src.geometry import Polygon
from src.schema import (
    CircleSpec,
    SupportFourierSpec,
    dump_table,
    load_curve,
    load_polygon,
    load_table,
    table_adapter,
    table_from_spec,
    table_to_json,
    table_to_spec,
)
from src.table import AffineTable, PiecewiseArcsTable, SplineSupportTable, SupportFourierTable, ellipse, outer_map
from src.util import TextInMemoryDataSource


def load(payload: object):
    return load_table(TextInMemoryDataSource(json.dumps(payload)))


def test_circle_spec():
    table = load({"kind": "circle", "radius": 2.0, "center": [1.0, 0.0]})
    assert isinstance(table, SupportFourierTable)
    np.testing.assert_allclose(table.boundary_point(0.0), [3.0, 0.0], atol=1e-15)


def test_discriminator_selects_model():
    assert isinstance(table_adapter.validate_python({"kind": "circle"}), CircleSpec)
    assert isinstance(table_adapter.validate_python({"kind": "support_fourier", "h0": 1.0}), SupportFourierSpec)


def test_nested_affine_spec():
    table = load({"kind": "affine", "base": {"kind": "circle"}, "matrix": [[2.0, 0.0], [0.0, 1.0]]})
    assert isinstance(table, AffineTable)
    x = np.array([2.5, 1.5])
    np.testing.assert_allclose(outer_map(table, x), outer_map(ellipse(2.0, 1.0), x), atol=1e-12)


@pytest.mark.parametrize(
    "payload",
    [
        {"kind": "polygon"},
        {"kind": "circle", "radius": -1.0},
        {"kind": "circle", "color": "red"},
        {"kind": "support_fourier", "h0": 1.0, "coeffs": [[0.0, 0.0], [0.5, 0.0]]},
        {"kind": "support_spline", "thetas": [0.0, 1.0], "values": [1.0, 1.0]},
        {"kind": "piecewise", "pieces": [{"center": [0, 0], "radius": 1.0, "theta_start": 0.0, "theta_end": 1.0}]},
    ],
)
def test_malformed_tables_raise_config_error(payload):
    with pytest.raises(ConfigError):
        load(payload)


def test_malformed_json_raises_config_error():
    with pytest.raises(ConfigError):
        load_table(TextInMemoryDataSource("{not json"))


@pytest.mark.parametrize(
    "table",
    [
        SupportFourierTable(1.0, np.array([[0.1, 0.0], [0.02, -0.01]])),
        PiecewiseArcsTable.rounded_square(1.0, 5.0),
        ellipse(1.5, 1.0).translated([0.2, 0.0]),
    ],
)
def test_table_survives_json(table):
    reloaded = load_table(TextInMemoryDataSource(dump_table(table)))
    assert type(reloaded) is type(table)
    x = np.array([2.7, -0.4])
    np.testing.assert_allclose(outer_map(reloaded, x), outer_map(table, x), atol=1e-12)


def test_spline_table_to_json():
    thetas = np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)
    table = SplineSupportTable(thetas, 1.0 + 0.05 * np.cos(2.0 * thetas))
    payload = table_to_json(table)
    assert payload["kind"] == "support_spline"
    assert len(payload["values"]) == 32
    assert isinstance(table_from_spec(table_to_spec(table)), SplineSupportTable)


def test_dump_is_sorted_and_stable(unit_circle):
    text = dump_table(unit_circle)
    assert text == dump_table(SupportFourierTable.circle())
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_unsupported_table_type():
    with pytest.raises(InvalidTableError):
        table_to_spec(object())


def test_polygon_json():
    polygon = load_polygon(TextInMemoryDataSource('{"vertices": [[0, 0], [1, 0], [0, 1]]}'))
    assert isinstance(polygon, Polygon)
    assert polygon.n == 3


@pytest.mark.parametrize(
    "text",
    ['{"vertices": [[0, 0], [1, 0]]}', '{"vertices": [[0, 0], [0, 0], [1, 1]]}', '{"points": []}'],
)
def test_bad_polygon_json(text):
    with pytest.raises(ConfigError):
        load_polygon(TextInMemoryDataSource(text))


def test_curve_json():
    curve = load_curve(TextInMemoryDataSource('{"terms": [{"m": 1, "re": 1.0}, {"m": -2, "re": 0.03, "im": 0.01}]}'))
    assert curve.frequencies == (-2, 1)
    assert curve.coefficient(-2) == pytest.approx(0.03 + 0.01j)


@pytest.mark.parametrize(
    "text",
    [
        '{"terms": [{"m": 1, "re": 1.0}, {"m": 1, "re": 0.1}]}',
        '{"terms": [{"m": 1, "re": 1.0}, {"m": 3, "re": 0.1}]}',
        '{"terms": []}',
    ],
)
def test_bad_curve_json(text):
    with pytest.raises(ConfigError):
        load_curve(TextInMemoryDataSource(text))
