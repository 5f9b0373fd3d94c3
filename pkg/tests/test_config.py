"""
Tests for the settings file manager
"""
import json
import tempfile
from pathlib import Path

import pytest

from src.ans_core import CodecParams, InvalidParamsError
from src.config import Config


def test_defaults_written_when_missing():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "nested" / "settings.json"
        config = Config(str(path))
        assert path.exists()
        assert json.loads(path.read_text(encoding="utf-8")) == Config.DEFAULT_CONFIG
        assert config.codec_params == CodecParams(64, 32, 16)
        assert config.model == "static"
        assert config.stats_format == "human"
        assert config.strict_end_state is False
        assert config.log_level == "INFO"


def test_bad_json_falls_back_to_defaults():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "settings.json"
        path.write_text("{not json", encoding="utf-8")
        config = Config(str(path))
        assert config.settings == Config.DEFAULT_CONFIG
        # the broken file is left for the user to fix
        assert path.read_text(encoding="utf-8") == "{not json"


def test_missing_keys_use_defaults():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "settings.json"
        path.write_text(json.dumps({"r": 12, "log_level": "debug"}), encoding="utf-8")
        config = Config(str(path))
        assert config.codec_params == CodecParams(64, 32, 12)
        assert config.selftest_trials == 200
        assert config.log_level == "DEBUG"


def test_save_and_reload():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "settings.json"
        config = Config(str(path))
        config.update({"r_s": 32, "r_t": 16, "r": 8, "model": "adaptive"})
        config.set("use_lookup_table", True)
        assert config.save()
        reloaded = Config(str(path))
        assert reloaded.codec_params == CodecParams(32, 16, 8)
        assert reloaded.model == "adaptive"
        assert reloaded.use_lookup_table is True
        assert reloaded.get("missing", "fallback") == "fallback"


def test_invalid_precisions():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "settings.json"
        path.write_text(json.dumps({"r_s": 32, "r_t": 16, "r": 16}), encoding="utf-8")
        with pytest.raises(InvalidParamsError):
            Config(str(path)).codec_params
