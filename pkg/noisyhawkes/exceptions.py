"""Exception and warning types raised by noisyhawkes."""

from typing import List, Optional, Sequence


class ConfigError(ValueError):
    """Invalid configuration file, model file or CLI flag combination."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures during evaluation or optimisation."""


class SpectralEvaluationError(NumericalError):
    """The spectral matrix is singular or not positive definite at some frequency."""

    def __init__(self, message: str, nu: Optional[float] = None):
        super().__init__(message)
        self.nu = nu


class FitError(NumericalError):
    """
    Every optimiser restart failed.

    Attributes:
        traces: Per-restart records (dicts) collected before giving up.
        failures: Optional list of (subsample index, message) pairs when the
            failure comes from the support pipeline.
    """

    def __init__(
        self,
        message: str,
        traces: Optional[Sequence[dict]] = None,
        failures: Optional[List[tuple]] = None,
    ):
        super().__init__(message)
        self.traces = list(traces or [])
        self.failures = list(failures or [])


class NonIdentifiableSupportWarning(UserWarning):
    """
    Detected interaction support falls in a family whose spectrum does not
    determine the parameters.

    Attributes:
        support_mask: Nested list of booleans, the detected support.
        pattern: Label returned by ``classify_support``.
    """

    def __init__(self, message: str, support_mask=None, pattern: str = ""):
        super().__init__(message)
        self.support_mask = support_mask
        self.pattern = pattern
