from .support.utils.logging_handler import configure_logging

configure_logging()

__version__ = "1.0.0"
