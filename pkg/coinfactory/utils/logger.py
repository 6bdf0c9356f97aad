import logging
import os
import sys
from typing import Optional


DEFAULT_FORMAT = "%(asctime)s %(levelname)-8s %(message)s"


def generate_logger(
    name: str,
    log_level: Optional[str] = None,
    formatter_str: str = DEFAULT_FORMAT,
) -> logging.Logger:
    """Generate a logger with the given name and log level.

    Records go to stderr so that reports written to stdout stay parseable.

    Args:
        name (str): The name of the logger.
        log_level (str, optional): The log level. Defaults to the
            FACTORY_LOG_LEVEL environment variable, then "INFO".
        formatter_str (str, optional): The formatter string.

    Returns:
        logging.Logger: The logger.
    """
    logger = logging.getLogger(name)
    logger.setLevel(log_level or os.getenv("FACTORY_LOG_LEVEL", "INFO").upper())

    # Modules are re-imported by worker processes; keep a single handler.
    if not any(getattr(handler, "_coinfactory", False) for handler in logger.handlers):
        stream_handler = logging.StreamHandler(stream=sys.stderr)
        stream_handler.setFormatter(logging.Formatter(formatter_str))
        stream_handler._coinfactory = True
        logger.addHandler(stream_handler)
        logger.propagate = False

    return logger
