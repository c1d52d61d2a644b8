# Core/logging_setup.py
# ============================================================================
# Logging configuration (console colors + rotating file)
# ============================================================================

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(funcName)s:%(lineno)d] - %(message)s'
DEFAULT_LOG_FILE = 'vacuumflow.log'


class ColoredFormatter(logging.Formatter):
    """Colored log formatter for better visibility"""

    COLORS = {
        'DEBUG': '\033[36m',    # Cyan
        'INFO': '\033[32m',     # Green
        'WARNING': '\033[33m',  # Yellow
        'ERROR': '\033[31m',    # Red
        'CRITICAL': '\033[35m', # Magenta
    }
    RESET = '\033[0m'

    def format(self, record):
        # Copy so the file handler still sees the plain level name
        record = logging.makeLogRecord(record.__dict__)
        color = self.COLORS.get(record.levelname, self.RESET)
        record.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(record)


def level_from_int(level: int) -> int:
    match level:
        case 10:
            return logging.DEBUG
        case 20:
            return logging.INFO
        case 30:
            return logging.WARNING
        case 40:
            return logging.ERROR
        case 50:
            return logging.CRITICAL
        case _:
            return logging.INFO


def configure_logging(level: int = logging.INFO, log_file: Optional[str] = None) -> logging.Logger:
    """Install file + console handlers on the root logger.

    Called by the entry point only; library modules just ask for a named logger.
    """
    log_file = log_file or os.getenv("VACUUMFLOW_LOG_FILE", DEFAULT_LOG_FILE)
    root = logging.getLogger()
    root.setLevel(level)

    for handler in list(root.handlers):
        root.removeHandler(handler)

    file_handler = RotatingFileHandler(log_file, maxBytes=10*1024*1024, backupCount=5)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(ColoredFormatter(LOG_FORMAT))
    root.addHandler(console_handler)

    return root
