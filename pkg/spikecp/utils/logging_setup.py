"""Logging configuration shared by the command-line entry points."""

import logging

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    # keep third-party loggers quiet at DEBUG
    for noisy in ("torch", "urllib3"):
        logging.getLogger(noisy).setLevel(logging.WARNING)
    return level
