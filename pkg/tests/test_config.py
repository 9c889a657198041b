from pathlib import Path

import pytest

from src.config import DEFAULT_CONFIG_PATH, Config, Tolerances, TomlConfig, load_config, resolve_config_path
from src.errors import ConfigError
from src.util import BinaryInMemoryDataSource, IterationEvent, on_solver_iteration


def parse(text: str) -> Config:
    return TomlConfig(BinaryInMemoryDataSource(text.encode("utf-8"))).parse()


def test_minimal_config_uses_defaults():
    config = parse('output_dir = "out"\nlog_file = "lab.log"\n')
    assert config.output_dir == Path("out")
    assert config.integration_steps == 800
    assert config.tolerances == Tolerances()


def test_nested_tolerances():
    config = parse('output_dir = "out"\nlog_file = "lab.log"\n[tolerances]\nshoot = 1e-6\n')
    assert config.tolerances.shoot == 1e-6
    assert config.tolerances.closure == 1e-9


@pytest.mark.parametrize(
    "text",
    [
        'output_dir = "out"\n',
        'output_dir = "out"\nlog_file = "lab.log"\nintegration_steps = 0\n',
        'output_dir = "out"\nlog_file = "lab.log"\n[tolerances]\nfit = -1.0\n',
        "output_dir = \n",
    ],
)
def test_invalid_config_raises_config_error(text):
    with pytest.raises(ConfigError):
        parse(text)


def test_default_config_file_is_valid():
    config = load_config(DEFAULT_CONFIG_PATH)
    assert config.seed == 20240521
    assert config.tolerances.parallel == 1e-10


def test_tolerance_override():
    tolerances = Tolerances().override(["closure=1e-7", "rank=1e-6"])
    assert tolerances.closure == 1e-7
    assert tolerances.rank == 1e-6
    assert tolerances.shoot == Tolerances().shoot


@pytest.mark.parametrize("assignment", ["bogus=1", "closure", "closure=abc", "closure=-1"])
def test_bad_tolerance_override(assignment):
    with pytest.raises(ConfigError):
        Tolerances().override([assignment])


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_seed_from_environment(config_file, monkeypatch):
    monkeypatch.setenv("OBL_SEED", "99")
    assert load_config(config_file).seed == 99
    monkeypatch.setenv("OBL_SEED", "x")
    with pytest.raises(ConfigError):
        load_config(config_file)


def test_config_path_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv("CONFIG_FILE_PATH", raising=False)
    assert resolve_config_path(None) == DEFAULT_CONFIG_PATH
    monkeypatch.setenv("CONFIG_FILE_PATH", str(tmp_path / "env.toml"))
    assert resolve_config_path(None) == tmp_path / "env.toml"
    assert resolve_config_path(tmp_path / "cli.toml") == tmp_path / "cli.toml"


def test_iteration_dispatcher():
    received = []
    on_solver_iteration.subscribe(received.append)
    try:
        on_solver_iteration.notify(IterationEvent("test", 0, 1.0))
    finally:
        on_solver_iteration.unsubscribe(received.append)
    on_solver_iteration.notify(IterationEvent("test", 1, 0.5))
    assert received == [IterationEvent("test", 0, 1.0)]


def test_listening_unsubscribes_after_errors():
    received = []
    with pytest.raises(RuntimeError):
        with on_solver_iteration.listening(received.append):
            on_solver_iteration.notify(IterationEvent("shoot", 0, 2.0))
            raise RuntimeError("stop")
    on_solver_iteration.notify(IterationEvent("shoot", 1, 1.0))
    assert [event.iteration for event in received] == [0]
