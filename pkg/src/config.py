"""
Configuration Management for the rANS codec
Handles loading and saving of settings
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from .ans_core import CodecParams


logger = logging.getLogger(__name__)


class Config:
    """Configuration manager backed by settings/settings.json"""

    DEFAULT_CONFIG: Dict[str, Any] = {
        "r_s": 64,
        "r_t": 32,
        "r": 16,
        "model": "static",
        "stats_format": "human",
        "use_lookup_table": False,
        "strict_end_state": False,
        "selftest_trials": 200,
        "selftest_seed": 20190101,
        "log_level": "INFO",
    }

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration manager

        Args:
            config_path: Path to settings.json file
        """
        if config_path is None:
            current_dir = Path(__file__).parent
            config_path = current_dir.parent / "settings" / "settings.json"

        self.config_path = Path(config_path)
        self.settings: Dict[str, Any] = {}

        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        self.load()

    def load(self) -> Dict[str, Any]:
        """
        Load configuration from file

        Returns:
            The loaded settings dictionary
        """
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    self.settings = json.load(f)
            except (json.JSONDecodeError, IOError) as e:
                logger.warning(f"Error loading config: {e}. Using defaults.")
                self.settings = self.DEFAULT_CONFIG.copy()
        else:
            self.settings = self.DEFAULT_CONFIG.copy()
            self.save()

        return self.settings

    def save(self) -> bool:
        """
        Save current configuration to file

        Returns:
            True if save was successful, False otherwise
        """
        try:
            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(self.settings, f, indent=2)
            return True
        except IOError as e:
            logger.error(f"Error saving config: {e}")
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            The configuration value or default
        """
        return self.settings.get(key, default)

    def set(self, key: str, value: Any) -> None:
        self.settings[key] = value

    def update(self, updates: Dict[str, Any]) -> None:
        self.settings.update(updates)

    def _default(self, key: str) -> Any:
        return self.get(key, self.DEFAULT_CONFIG[key])

    @property
    def r_s(self) -> int:
        """Head precision in bits"""
        return int(self._default("r_s"))

    @property
    def r_t(self) -> int:
        """Tail word precision in bits"""
        return int(self._default("r_t"))

    @property
    def r(self) -> int:
        """Probability precision in bits"""
        return int(self._default("r"))

    @property
    def codec_params(self) -> CodecParams:
        """CodecParams from r_s, r_t and r (raises InvalidParamsError)"""
        return CodecParams(self.r_s, self.r_t, self.r)

    @property
    def model(self) -> str:
        """Default model for compress: static or adaptive"""
        return self._default("model")

    @property
    def stats_format(self) -> str:
        return self._default("stats_format")

    @property
    def use_lookup_table(self) -> bool:
        """Build direct bar_s lookup tables for static models"""
        return bool(self._default("use_lookup_table"))

    @property
    def strict_end_state(self) -> bool:
        """Treat a decoder end-state mismatch as corrupt input"""
        return bool(self._default("strict_end_state"))

    @property
    def selftest_trials(self) -> int:
        return int(self._default("selftest_trials"))

    @property
    def selftest_seed(self) -> int:
        return int(self._default("selftest_seed"))

    @property
    def log_level(self) -> str:
        return str(self._default("log_level")).upper()
