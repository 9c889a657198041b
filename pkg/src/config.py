from __future__ import annotations

import os
import tomllib
from pathlib import Path

from pydantic import BaseModel, PositiveFloat, PositiveInt, ValidationError

from src.errors import ConfigError
from src.util import BinaryDataSource, BinaryFileDataSource

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "default.toml"


class TomlConfig:

    def __init__(self, data_source: BinaryDataSource):
        self._data_source = data_source

    def parse(self) -> Config:
        try:
            with self._data_source.open_stream() as stream:
                data_dict = tomllib.load(stream)
            return Config.model_validate(data_dict)
        except (tomllib.TOMLDecodeError, ValidationError) as e:
            raise ConfigError(f"設定ファイルが不正です: {e}") from e


class Tolerances(BaseModel):
    degeneracy: PositiveFloat = 1e-10
    horizontal: PositiveFloat = 1e-9
    closure: PositiveFloat = 1e-9
    shoot: PositiveFloat = 1e-8
    monodromy3: PositiveFloat = 1e-10
    fit: PositiveFloat = 1e-6
    rank: PositiveFloat = 1e-8
    parallel: PositiveFloat = 1e-10

    def override(self, assignments: list[str]) -> Tolerances:
        # NAME=VALUE 形式の上書きを適用し、検証済みの新しいインスタンスを返す
        values = self.model_dump()
        for assignment in assignments:
            name, sep, raw = assignment.partition("=")
            if not sep or name not in values:
                raise ConfigError(f"不明な許容誤差の指定です: {assignment}")
            try:
                values[name] = float(raw)
            except ValueError as e:
                raise ConfigError(f"許容誤差の値が数値ではありません: {assignment}") from e
        try:
            return Tolerances.model_validate(values)
        except ValidationError as e:
            raise ConfigError(str(e)) from e


class Config(BaseModel):
    output_dir: Path
    log_file: Path
    seed: int = 0
    integration_steps: PositiveInt = 800
    quadrature_points: PositiveInt = 4096
    max_harmonics: PositiveInt = 24
    tolerances: Tolerances = Tolerances()


def resolve_config_path(cli_path: Path | None) -> Path:
    if cli_path is not None:
        return cli_path
    env_path = os.getenv("CONFIG_FILE_PATH")
    if env_path:
        return Path(env_path)
    return DEFAULT_CONFIG_PATH


def load_config(config_path: Path) -> Config:
    if not config_path.exists():
        raise ConfigError(f"設定ファイルが見つかりません: {config_path}")
    config = TomlConfig(BinaryFileDataSource(config_path)).parse()
    seed = os.getenv("OBL_SEED")
    if seed:
        try:
            config = config.model_copy(update={"seed": int(seed)})
        except ValueError as e:
            raise ConfigError(f"OBL_SEED が整数ではありません: {seed}") from e
    return config
