"""Configuration management."""

import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from disperse_lab.utils.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "numerics": {
        "grid_radius": 12.0,
        "grid_points": 2048,
        "epsilon_levels": 6,
    },
    "monte_carlo": {
        "samples": 1000000,
        "seed": 20240601,
    },
    "parallel": {
        "threads": 1,
    },
    "output": {
        "directory": "results",
    },
    "database": {
        "path": "data/run_ledger.db",
    },
    "logging": {
        "level": "INFO",
        "file": None,
        "max_bytes": 10485760,
        "backup_count": 5,
    },
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge override into a copy of base."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class Settings:
    """Settings manager (YAML file + .env + environment overrides)."""

    def __init__(self, config_path: Optional[str] = None):
        """Initialize settings.

        Args:
            config_path: Path to YAML settings file. When None, ``config.yaml`` in the
                working directory is used if present, otherwise built-in defaults.
        """
        self.config_path = Path(config_path) if config_path else Path("config.yaml")
        self._explicit = config_path is not None
        self._config: Dict[str, Any] = copy.deepcopy(DEFAULTS)
        self._load_env()
        self._load_yaml()

    def _load_env(self) -> None:
        """Load environment variables from .env file."""
        env_path = Path(".env")
        if env_path.exists():
            load_dotenv(env_path)

    def _load_yaml(self) -> None:
        """Load YAML settings file."""
        if not self.config_path.exists():
            if self._explicit:
                raise ConfigError(
                    f"Settings file not found: {self.config_path}\n"
                    "Copy config.example.yaml to config.yaml and adjust it."
                )
            logger.info("No config.yaml found, using built-in defaults")
        else:
            with open(self.config_path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
            if not isinstance(loaded, dict):
                raise ConfigError(f"{self.config_path}: top level must be a mapping")
            self._config = _merge(self._config, loaded)

        self._apply_env_overrides()

    def _apply_env_overrides(self) -> None:
        """Apply environment variable overrides."""
        if threads := os.getenv("DISPERSE_LAB_THREADS"):
            try:
                self._config["parallel"]["threads"] = max(1, int(threads))
            except ValueError as e:
                raise ConfigError(f"DISPERSE_LAB_THREADS must be an integer: {e}") from e

        if level := os.getenv("DISPERSE_LAB_LOG_LEVEL"):
            self._config["logging"]["level"] = level

        if out_dir := os.getenv("DISPERSE_LAB_OUTPUT_DIR"):
            self._config["output"]["directory"] = out_dir

        if seed := os.getenv("DISPERSE_LAB_SEED"):
            try:
                self._config["monte_carlo"]["seed"] = int(seed)
            except ValueError as e:
                raise ConfigError(f"DISPERSE_LAB_SEED must be an integer: {e}") from e

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dot-notation key.

        Args:
            key: Dot-notation key (e.g., "numerics.grid_points")
            default: Default value if key not found

        Returns:
            Configuration value
        """
        keys = key.split(".")
        value: Any = self._config

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return default
            else:
                return default

        return value

    def set(self, key: str, value: Any) -> None:
        """Set a dot-notation key for this process (used by command-line flags)."""
        *parents, leaf = key.split(".")
        node = self._config
        for k in parents:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key}: {k} is not a section")
        node[leaf] = value

    @property
    def log_level(self) -> str:
        return str(self.get("logging.level", "INFO"))

    @property
    def threads(self) -> int:
        """Get parallelism cap."""
        return int(self.get("parallel.threads", 1))

    @property
    def grid_radius(self) -> float:
        """Get default outer radius of radial grids."""
        return float(self.get("numerics.grid_radius", 12.0))

    @property
    def grid_points(self) -> int:
        """Get default number of radial grid points."""
        return int(self.get("numerics.grid_points", 2048))

    @property
    def epsilon_levels(self) -> int:
        """Get number of levels in the oscillatory regularization ladder."""
        return int(self.get("numerics.epsilon_levels", 6))

    @property
    def mc_samples(self) -> int:
        """Get default Monte Carlo sample count."""
        return int(self.get("monte_carlo.samples", 1000000))

    @property
    def seed(self) -> int:
        """Get Monte Carlo seed."""
        return int(self.get("monte_carlo.seed", 20240601))

    @property
    def output_dir(self) -> Path:
        """Get output directory."""
        return Path(self.get("output.directory", "results"))

    @property
    def ledger_path(self) -> str:
        """Get SQLite run ledger path."""
        return str(self.get("database.path", "data/run_ledger.db"))
