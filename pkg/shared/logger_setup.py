# logger_setup.py
import logging

import colorlog
from decouple import config

# Configured once at import; the handler writes to stderr, reports go to stdout
handler = colorlog.StreamHandler()
handler.setFormatter(colorlog.ColoredFormatter(
    '%(log_color)s%(asctime)s | %(levelname)s | %(name)s:%(lineno)d | %(message)s',
    log_colors={
        'DEBUG':    'cyan',
        'INFO':     'green',
        'WARNING':  'yellow',
        'ERROR':    'red',
        'CRITICAL': 'red,bg_white',
    }
))
logging.getLogger().addHandler(handler)
logging.getLogger().setLevel(config("SEPAIR_LOG_LEVEL", default="WARNING").upper())


def get_logger(name=None):
    return logging.getLogger(name or __name__)


def set_level(level: str) -> None:
    """Override the root level, e.g. from a CLI flag."""
    logging.getLogger().setLevel(level.upper())
