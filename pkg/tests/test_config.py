"""Tests for key=value configuration and precedence."""

from pathlib import Path

import pytest

from src.config import CONFIG_KEYS, build_config, load_config_file, parse_config_text, resolve_config
from src.errors import ConfigError
from src.models import Encoding, MotionFamily, ScorerKind, TrackerConfig, UpdateMode

CONFIG_TEXT = """
# tracker settings
family = laplace
lambda_x = 3.5   # pixels-to-state
n_candidates = 129
scales = 0.95, 1.0, 1.05
update_mode = always
observation_only = true
seed = 7
"""


def test_parse_config_text() -> None:
    values = parse_config_text(CONFIG_TEXT)
    assert values["family"] == "laplace"
    assert values["lambda_x"] == "3.5"
    assert values["scales"] == ["0.95", "1.0", "1.05"]
    assert "tracker settings" not in str(values)


def test_build_config_coerces_strings() -> None:
    cfg = build_config(parse_config_text(CONFIG_TEXT))
    assert cfg.family is MotionFamily.LAPLACE
    assert cfg.lambda_x == 3.5
    assert cfg.n_candidates == 129
    assert cfg.scales == (0.95, 1.0, 1.05)
    assert cfg.update_mode is UpdateMode.ALWAYS
    assert cfg.observation_only is True
    assert cfg.seed == 7
    # untouched keys keep their defaults
    assert cfg.lambda_y == 2.0
    assert cfg.encoding is Encoding.PREV
    assert cfg.scorer is ScorerKind.NCC


def test_defaults_without_file() -> None:
    assert resolve_config() == TrackerConfig()


def test_flags_win_over_file(tmp_path: Path) -> None:
    path = tmp_path / "tracker.conf"
    path.write_text(CONFIG_TEXT)
    cfg = resolve_config(path, {"lambda_x": 9.0, "scales": "1.0", "seed": None})
    assert cfg.lambda_x == 9.0
    assert cfg.scales == (1.0,)
    # None means "not given"
    assert cfg.seed == 7
    assert cfg.family is MotionFamily.LAPLACE


class TestConfigErrors:
    """Invalid configuration is reported as ConfigError."""

    def test_unknown_key(self) -> None:
        with pytest.raises(ConfigError, match="unknown key 'colour'"):
            parse_config_text("colour = red\n")

    def test_missing_equals(self) -> None:
        with pytest.raises(ConfigError, match=":2:"):
            parse_config_text("seed = 1\njust words\n", source="x.conf")

    def test_bad_value(self) -> None:
        with pytest.raises(ConfigError):
            build_config({"lambda_x": "fast"})

    def test_invalid_value_caught_by_validation(self) -> None:
        with pytest.raises(ConfigError):
            build_config({"lambda_x": "-1"})
        with pytest.raises(ConfigError):
            build_config({"family": "cauchy"})

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError):
            load_config_file(tmp_path / "nope.conf")

    def test_undecodable_file(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.conf"
        path.write_bytes(b"seed = \xff\n")
        with pytest.raises(ConfigError):
            load_config_file(path)


def test_every_tunable_is_a_key() -> None:
    for key in ("family", "lambda_x", "lambda_y", "n_candidates", "scales", "sigma_alpha",
                "update_interval", "update_threshold", "update_rate", "seed", "bins"):
        assert key in CONFIG_KEYS
