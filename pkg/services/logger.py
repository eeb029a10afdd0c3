import logging
import sys
from typing import List

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%H:%M:%S'

_installed: List[logging.Handler] = []


def setup_logger(level: int = logging.INFO):
    """Configure the logging system; calling it again replaces the previous handler"""
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    for handler in _installed:
        root_logger.removeHandler(handler)
    _installed.clear()

    # stderr, so stdout stays clean for data
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    root_logger.addHandler(console_handler)
    _installed.append(console_handler)

    logging.debug("Logging initialized")
