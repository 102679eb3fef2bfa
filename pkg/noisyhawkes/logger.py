import logging

logger = logging.getLogger("noisy_hawkes")
handler = logging.StreamHandler()
formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
handler.setFormatter(formatter)
logger.addHandler(handler)
logger.setLevel(logging.WARNING)

# -v count -> level; counts above 2 stay at DEBUG
_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def set_verbosity(verbose=0):
    """Set the level of the package logger.

    Args:
        verbose (int): 0 for WARNING, 1 for INFO, 2 or more for DEBUG.
    """
    logger.setLevel(_LEVELS[min(max(int(verbose), 0), len(_LEVELS) - 1)])


def get_verbosity() -> int:
    """Verbosity matching the current logger level, the inverse of ``set_verbosity``."""
    if logger.level <= logging.DEBUG:
        return 2
    return 1 if logger.level <= logging.INFO else 0
