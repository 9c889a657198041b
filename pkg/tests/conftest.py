from pathlib import Path

import numpy as np
import pytest

from src.geometry import Polygon
from src.table import SupportFourierTable


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)


@pytest.fixture
def unit_circle() -> SupportFourierTable:
    return SupportFourierTable.circle()


@pytest.fixture
def wavy_table() -> SupportFourierTable:
    # h = 1 + 0.03 cos 2θ + 0.01 sin 3θ、ρ > 0
    return SupportFourierTable(1.0, np.array([[0.0, 0.0], [0.03, 0.0], [0.0, 0.01]]))


@pytest.fixture
def square() -> Polygon:
    return Polygon.from_points([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "config.toml"
    path.write_text(
        "\n".join(
            [
                f'output_dir = "{(tmp_path / "out").as_posix()}"',
                f'log_file = "{(tmp_path / "lab.log").as_posix()}"',
                "seed = 7",
                "integration_steps = 200",
            ]
        ),
        encoding="utf-8",
    )
    return path
