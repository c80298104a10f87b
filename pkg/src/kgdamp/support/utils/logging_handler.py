"""
Logging handler.
Part of the kg-damp package.
"""

import logging
import os


def configure_logging() -> logging.Logger:
    """
    Configures and initializes logging for the kg-damp package.

    The function sets up a root logger for the package with a logging level determined by
    an environment variable, and a console handler that prints timestamp, logger name,
    level, message, module and line number.

    Environment Variables
    ---------------------
    KGDAMP_LOG_LEVEL : str, optional
        Logging level for the kgdamp logger. Acceptable values are 'DEBUG', 'INFO',
        'WARNING', 'ERROR' and 'CRITICAL'. Defaults to 'INFO'.

    Returns
    -------
    logging.Logger
        The configured root logger for the kg-damp package.

    Notes
    -----
    - The logger's name is 'kgdamp'.
    - Calling the function twice does not duplicate the console handler.
    """
    log_level = os.getenv("KGDAMP_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, log_level, logging.INFO)

    logger = logging.getLogger(name="kgdamp")
    logger.setLevel(level)

    if not any(getattr(h, "_kgdamp", False) for h in logger.handlers):
        ch = logging.StreamHandler()
        ch.setLevel(level)
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s (%(module)s:%(lineno)d)"
        )
        ch.setFormatter(formatter)
        ch._kgdamp = True
        logger.addHandler(ch)
    return logger


def progress_disabled() -> bool:
    """True when progress bars are switched off through ``KGDAMP_DISABLE_TQDM``."""
    return os.getenv("KGDAMP_DISABLE_TQDM", "False") in ["True", "true", "1"]
