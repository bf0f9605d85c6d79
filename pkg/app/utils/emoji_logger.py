"""
Emoji-tagged logging for simulation runs, with a rotating application log and a
separate validation audit stream.
"""
import logging
import logging.handlers
import os
from datetime import datetime
from typing import Optional, Dict, Any
from pathlib import Path

class EmojiLogger:
    """Logger with emoji categories for quick visual scanning of long simulation runs."""

    # Emoji categories for different types of logs
    EMOJIS = {
        # System and Application Flow
        'startup': '🚀',
        'shutdown': '🔌',
        'config': '⚙️',
        'success': '✅',
        'error': '❌',
        'warning': '⚠️',
        'info': 'ℹ️',

        # Models
        'channel': '📡',
        'timing': '⏱️',
        'kinematics': '🚗',

        # Experiments
        'trial': '🎲',
        'sweep': '📈',
        'adapt': '🔁',

        # Files
        'save': '💾',
        'load': '📂',

        # Checks
        'validation': '✔️',
        'failure': '🚫',
    }

    # Default paths
    LOG_DIR = 'logs'
    APP_LOG_FILE = 'application.log'
    VALIDATION_LOG_FILE = 'validation.log'
    VALIDATION_CATEGORIES = ('validation', 'failure')

    @classmethod
    def setup_logging(cls, config: Optional[Dict[str, Any]] = None) -> None:
        """
        Set up console output, the rotating application log and the validation log.

        Args:
            config: Optional settings; ``log_dir`` and ``log_level`` are honoured
        """
        if config is None:
            config = {}

        log_dir = Path(config.get('log_dir') or os.getenv('VANET_ADAPT_LOG_DIR', cls.LOG_DIR))
        log_dir.mkdir(parents=True, exist_ok=True)
        console_level = getattr(logging, str(config.get('log_level', os.getenv('LOG_LEVEL', 'INFO'))).upper(),
                                logging.INFO)

        app_logger = logging.getLogger('emoji_logger')
        app_logger.setLevel(logging.DEBUG)

        validation_logger = logging.getLogger('validation')
        validation_logger.setLevel(logging.INFO)

        # Remove any existing handlers
        for logger in (app_logger, validation_logger):
            for handler in logger.handlers[:]:
                logger.removeHandler(handler)
                handler.close()
            logger.propagate = False

        app_handler = logging.handlers.RotatingFileHandler(
            log_dir / cls.APP_LOG_FILE,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5,
            encoding='utf-8'
        )
        app_handler.setLevel(logging.DEBUG)
        app_handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
        app_logger.addHandler(app_handler)

        validation_handler = logging.handlers.RotatingFileHandler(
            log_dir / cls.VALIDATION_LOG_FILE,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5,
            encoding='utf-8'
        )
        validation_handler.setLevel(logging.INFO)
        validation_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(levelname)s - %(message)s - [%(extra_data)s]',
            defaults={'extra_data': ''}
        ))
        validation_logger.addHandler(validation_handler)

        # console only for the application stream; validation records reach it through log()
        console_handler = logging.StreamHandler()
        console_handler.setLevel(console_level)
        console_handler.setFormatter(logging.Formatter('%(message)s'))
        app_logger.addHandler(console_handler)
        cls._logging_setup_done = True

    @classmethod
    def log(cls, category: str, message: str, level: str = 'info', extra: Optional[Dict[str, Any]] = None) -> None:
        """
        Log a message with the emoji of its category.

        Args:
            category: Key of EMOJIS; unknown categories get a generic marker
            message: The message to log
            level: debug, info, warning, error or critical
            extra: Structured data written to the validation log
        """
        if not getattr(cls, '_logging_setup_done', False):
            cls.setup_logging()

        emoji = cls.EMOJIS.get(category, '📝')
        timestamp = datetime.now().strftime('%H:%M:%S.%f')[:-3]
        formatted_message = f"[{timestamp}] {emoji} {message}"

        logger = logging.getLogger('emoji_logger')
        log_func = getattr(logger, level.lower(), logger.info)
        log_func(formatted_message)

        if category in cls.VALIDATION_CATEGORIES:
            validation_logger = logging.getLogger('validation')
            validation_logger.info(
                formatted_message,
                extra={'extra_data': str(extra) if extra else ''}
            )

    @classmethod
    def validation_failure(cls, message: str, extra: Optional[Dict[str, Any]] = None) -> None:
        """Log a failed check together with its inputs and observed/expected values."""
        cls.log('failure', message, 'error', extra)

    @classmethod
    def validation_passed(cls, message: str, extra: Optional[Dict[str, Any]] = None) -> None:
        cls.log('validation', message, 'info', extra)

    @classmethod
    def startup(cls, message: str) -> None:
        cls.log('startup', message)

    @classmethod
    def shutdown(cls, message: str) -> None:
        cls.log('shutdown', message)

    @classmethod
    def error(cls, message: str) -> None:
        cls.log('error', message, 'error')

    @classmethod
    def warning(cls, message: str) -> None:
        cls.log('warning', message, 'warning')

    @classmethod
    def success(cls, message: str) -> None:
        cls.log('success', message)

    @classmethod
    def info(cls, message: str) -> None:
        cls.log('info', message)
