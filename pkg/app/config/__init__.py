"""Environment and run-configuration handling."""

from app.config.config_validator import ConfigError, RunConfig, load_config, parse_config
from app.config.env_manager import EnvironmentManager

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "EnvironmentManager"]
