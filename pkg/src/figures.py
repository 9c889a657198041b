"""各コマンドの図。pyplot の状態を使わず Figure を直接組み立てる。"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Circle
from numpy.typing import NDArray

from src.discrete import RotationReport
from src.geometry import Polygon
from src.horizontal import HorizontalPath
from src.periodicity import IdentityExample, RoundedSquareReport
from src.table import ConvexTable, sample_boundary

TABLE_STYLE = {"color": "black", "linewidth": 1.2}
ORBIT_STYLE = {"color": "tab:blue", "linewidth": 0.8, "marker": "o", "markersize": 2.5}


def _new_axes(title: str) -> tuple[Figure, object]:
    figure = Figure(figsize=(5.0, 5.0))
    axes = figure.add_subplot()
    axes.set_aspect("equal")
    axes.set_title(title)
    return figure, axes


def _closed(points: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.vstack([points, points[:1]])


def _draw_table(axes, table: ConvexTable) -> None:
    boundary = _closed(sample_boundary(table, 720))
    axes.fill(boundary[:, 0], boundary[:, 1], color="0.9")
    axes.plot(boundary[:, 0], boundary[:, 1], **TABLE_STYLE)


def orbit_figure(table: ConvexTable, points: NDArray[np.float64]) -> Figure:
    figure, axes = _new_axes("outer billiard orbit")
    _draw_table(axes, table)
    axes.plot(points[:, 0], points[:, 1], **ORBIT_STYLE)
    # 各反射の支点 (x と T(x) の中点)
    midpoints = 0.5 * (points[1:] + points[:-1])
    axes.plot(midpoints[:, 0], midpoints[:, 1], "x", color="tab:red", markersize=3)
    return figure


def family_figure(table_points: NDArray[np.float64], polygons: Sequence[Polygon], title: str) -> Figure:
    figure, axes = _new_axes(title)
    boundary = _closed(table_points)
    axes.fill(boundary[:, 0], boundary[:, 1], color="0.9")
    axes.plot(boundary[:, 0], boundary[:, 1], **TABLE_STYLE)
    for polygon in polygons:
        outline = _closed(polygon.vertices)
        axes.plot(outline[:, 0], outline[:, 1], color="tab:blue", linewidth=0.5, alpha=0.6)
    return figure


def path_figure(path: HorizontalPath, every: int = 40) -> Figure:
    figure, axes = _new_axes(f"horizontal path (n={path.start.n})")
    vertices = path.samples
    for j in range(path.start.n):
        axes.plot(vertices[:, j, 0], vertices[:, j, 1], linewidth=0.8)
    for i in range(0, path.steps + 1, every):
        outline = _closed(path.polygon(i).vertices)
        axes.plot(outline[:, 0], outline[:, 1], color="0.6", linewidth=0.4)
    return figure


def identity_figure(example: IdentityExample) -> Figure:
    figure, axes = _new_axes("three circles, identity differential")
    outline = _closed(example.triangle.vertices)
    axes.plot(outline[:, 0], outline[:, 1], **ORBIT_STYLE)
    for table in example.tables:
        boundary = _closed(sample_boundary(table, 360))
        axes.plot(boundary[:, 0], boundary[:, 1], **TABLE_STYLE)
    return figure


def rounded_square_figure(table: ConvexTable, report: RoundedSquareReport) -> Figure:
    figure, axes = _new_axes("rounded square, open set of 4-periodic points")
    _draw_table(axes, table)
    axes.plot(report.orbit[:, 0], report.orbit[:, 1], **ORBIT_STYLE)
    for point in report.orbit[:-1]:
        axes.add_patch(Circle(tuple(point), report.disk_radius, color="tab:orange", alpha=0.5))
    return figure


def rotation_figure(report: RotationReport) -> Figure:
    host = report.states[0].host
    figure, axes = _new_axes(f"triangle rotation in a {host.n}-gon")
    outline = _closed(host.vertices)
    axes.plot(outline[:, 0], outline[:, 1], **TABLE_STYLE)
    for index, state in enumerate(report.states):
        triangle = _closed(host.vertices[list(state.triangle)])
        shade = 0.2 + 0.6 * index / max(len(report.states) - 1, 1)
        axes.plot(triangle[:, 0], triangle[:, 1], color=(shade, 0.3, 1.0 - shade), linewidth=0.7)
    return figure
