"""
Environment Variable Management Module

Loads the optional .env file and exposes the environment overrides of the
simulator (log level and directory, worker count, output directory) with type
validation.
"""

import os
import logging
from typing import Any, Optional
from pathlib import Path
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

VALID_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class EnvironmentManager:
    """Manages environment overrides with validation."""

    KNOWN_VARS = {
        'LOG_LEVEL': str,
        'VANET_ADAPT_LOG_DIR': str,
        'VANET_ADAPT_WORKERS': int,
        'VANET_ADAPT_OUT_DIR': str,
    }

    DEFAULTS = {
        'LOG_LEVEL': 'INFO',
        'VANET_ADAPT_LOG_DIR': 'logs',
        'VANET_ADAPT_WORKERS': None,
        'VANET_ADAPT_OUT_DIR': 'results',
    }

    def __init__(self, env_file: Optional[str] = None):
        """Initialize the environment manager.

        Args:
            env_file: Optional path to .env file. If None, looks in the project root.
        """
        self.env_file = env_file
        self._load_environment()
        self._validate_environment()

    def _load_environment(self) -> None:
        """Load environment variables from .env file if it exists."""
        if self.env_file and Path(self.env_file).exists():
            load_dotenv(self.env_file)
        else:
            project_root = Path(__file__).parent.parent.parent
            env_path = project_root / '.env'
            if env_path.exists():
                load_dotenv(env_path)
                logger.info(f"Loaded environment from {env_path}")
            else:
                logger.debug("No .env file found, using system environment variables")

    def _validate_environment(self) -> None:
        """Check that every variable that is set converts to its declared type."""
        invalid_vars = []

        for var_name, var_type in self.KNOWN_VARS.items():
            value = os.getenv(var_name)
            if value is None or value == '':
                continue
            try:
                converted = var_type(value)
            except ValueError:
                invalid_vars.append(f"{var_name} (expected {var_type.__name__})")
                continue
            if var_name == 'LOG_LEVEL' and converted.upper() not in VALID_LOG_LEVELS:
                invalid_vars.append(f"LOG_LEVEL (one of {', '.join(VALID_LOG_LEVELS)})")
            if var_name == 'VANET_ADAPT_WORKERS' and converted < 1:
                invalid_vars.append("VANET_ADAPT_WORKERS (must be >= 1)")

        if invalid_vars:
            error_message = f"Invalid environment variables: {', '.join(invalid_vars)}"
            logger.error(error_message)
            raise EnvironmentError(error_message)

    def get(self, key: str, default: Any = None) -> Any:
        """Get an environment variable converted to its declared type.

        Args:
            key: The environment variable name
            default: Value returned when unset; falls back to DEFAULTS

        Returns:
            The converted value
        """
        value = os.getenv(key)
        if value is None or value == '':
            return default if default is not None else self.DEFAULTS.get(key)

        var_type = self.KNOWN_VARS.get(key, str)
        try:
            return var_type(value)
        except ValueError:
            logger.error(f"Error converting {key} to {var_type.__name__}")
            return default

    @property
    def workers(self) -> Optional[int]:
        """Worker count override, None when unset."""
        return self.get('VANET_ADAPT_WORKERS')
