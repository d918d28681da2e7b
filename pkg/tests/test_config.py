import logging
from pathlib import Path

import pytest

from disperse_lab.utils.config import Settings
from disperse_lab.utils.errors import ConfigError
from disperse_lab.utils.logger import setup_logger


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    for name in (
        "DISPERSE_LAB_THREADS",
        "DISPERSE_LAB_LOG_LEVEL",
        "DISPERSE_LAB_OUTPUT_DIR",
        "DISPERSE_LAB_SEED",
    ):
        # recorded so teardown also clears values loaded from .env
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    return tmp_path


def test_defaults_without_config_file(clean_env):
    settings = Settings()
    assert settings.grid_points == 2048
    assert settings.seed == 20240601
    assert settings.threads == 1
    assert settings.output_dir == Path("results")
    assert settings.log_level == "INFO"


def test_yaml_overrides_defaults(settings, settings_file):
    assert settings.grid_points == 512
    assert settings.grid_radius == 12.0
    assert settings.mc_samples == 20000
    assert settings.seed == 7
    assert settings.output_dir == settings_file.parent / "results"
    assert settings.log_level == "WARNING"


def test_explicit_missing_file(clean_env):
    with pytest.raises(ConfigError, match="not found"):
        Settings("missing.yaml")


def test_top_level_must_be_mapping(clean_env):
    path = clean_env / "config.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        Settings(str(path))


def test_environment_overrides(clean_env, monkeypatch):
    monkeypatch.setenv("DISPERSE_LAB_THREADS", "4")
    monkeypatch.setenv("DISPERSE_LAB_SEED", "99")
    monkeypatch.setenv("DISPERSE_LAB_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("DISPERSE_LAB_OUTPUT_DIR", "elsewhere")
    settings = Settings()
    assert settings.threads == 4
    assert settings.seed == 99
    assert settings.log_level == "DEBUG"
    assert settings.output_dir == Path("elsewhere")


@pytest.mark.parametrize("name", ["DISPERSE_LAB_THREADS", "DISPERSE_LAB_SEED"])
def test_bad_integer_environment(clean_env, monkeypatch, name):
    monkeypatch.setenv(name, "many")
    with pytest.raises(ConfigError, match=name):
        Settings()


def test_dotenv_file(clean_env):
    (clean_env / ".env").write_text("DISPERSE_LAB_SEED=31\n")
    assert Settings().seed == 31


def test_get_and_set(settings):
    assert settings.get("numerics.grid_points") == 512
    assert settings.get("numerics.missing", "fallback") == "fallback"
    assert settings.get("numerics.grid_points.deeper", 3) == 3
    settings.set("monte_carlo.seed", 123)
    assert settings.seed == 123
    settings.set("extra.section.value", 1.5)
    assert settings.get("extra.section.value") == 1.5
    with pytest.raises(ConfigError):
        settings.set("monte_carlo.seed.child", 1)


def test_logger_file_handler(tmp_path):
    log_file = tmp_path / "logs" / "run.log"
    logger = setup_logger("disperse_lab_test_file", "DEBUG", str(log_file))
    assert len(logger.handlers) == 2
    logger.debug("hello")
    for handler in logger.handlers:
        handler.flush()
    assert "hello" in log_file.read_text()
    again = setup_logger("disperse_lab_test_file", "WARNING", str(log_file))
    assert again is logger
    assert len(again.handlers) == 2
    assert again.level == logging.WARNING
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)
