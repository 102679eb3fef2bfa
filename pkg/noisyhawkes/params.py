"""Parameter container for noisy exponential-kernel Hawkes processes."""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .logger import logger
from .utils import _validate_hawkes_params, spectral_radius


@dataclass(frozen=True, eq=False)
class NoisyHawkesParams:
    """
    Parameters theta = (mu, alpha, beta, lambda0).

    The kernel from component j onto component i is
    ``alpha[i, j] * beta[i] * exp(-beta[i] * t)`` so ``alpha[i, j]`` is its L1
    norm. ``lambda0`` is the intensity shared by the d independent Poisson
    noise processes.
    """

    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    lambda0: float = 0.0
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float)).copy()
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float)).copy()
        for arr in (mu, alpha, beta):
            arr.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lambda0", float(self.lambda0))
        if self.validate:
            _validate_hawkes_params(mu, alpha, beta, self.lambda0)

    @classmethod
    def univariate(cls, mu: float, alpha: float, beta: float, lambda0: float = 0.0):
        return cls(mu=[mu], alpha=[[alpha]], beta=[beta], lambda0=lambda0)

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    @property
    def radius(self) -> float:
        return spectral_radius(self.alpha)

    def is_stationary(self) -> bool:
        return self.radius < 1.0

    def replace(self, **changes) -> "NoisyHawkesParams":
        values = {
            "mu": self.mu,
            "alpha": self.alpha,
            "beta": self.beta,
            "lambda0": self.lambda0,
        }
        values.update(changes)
        return NoisyHawkesParams(**values)

    def allclose(self, other: "NoisyHawkesParams", rtol=1e-9, atol=0.0) -> bool:
        return (
            self.d == other.d
            and np.allclose(self.mu, other.mu, rtol=rtol, atol=atol)
            and np.allclose(self.alpha, other.alpha, rtol=rtol, atol=atol)
            and np.allclose(self.beta, other.beta, rtol=rtol, atol=atol)
            and np.isclose(self.lambda0, other.lambda0, rtol=rtol, atol=atol)
        )

    def to_dict(self) -> Dict:
        return {
            "mu": self.mu.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "lambda0": self.lambda0,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "NoisyHawkesParams":
        missing = [key for key in ("mu", "alpha", "beta") if key not in data]
        if missing:
            raise ValueError(f"parameter mapping is missing keys: {missing}")
        return cls(
            mu=data["mu"],
            alpha=data["alpha"],
            beta=data["beta"],
            lambda0=data.get("lambda0", 0.0),
        )


def hawkes_mean_intensity(params: NoisyHawkesParams) -> np.ndarray:
    """Mean intensity m^H of the Hawkes part, solving (I - alpha) m = mu."""
    rho = params.radius
    if rho >= 1.0:
        logger.error(f"Mean intensity requested for non-stationary alpha (radius {rho:.6g})")
        raise ValueError(f"spectral radius of alpha must be < 1, got {rho:.6g}")
    try:
        return np.linalg.solve(np.eye(params.d) - params.alpha, params.mu)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"I - alpha is singular: {exc}") from exc


def mean_intensity(params: NoisyHawkesParams) -> np.ndarray:
    """
    Mean intensity of each component of the noisy process.

    Parameters:
        params (NoisyHawkesParams): Stationary parameter tuple.

    Returns:
        ndarray: m^N = m^H + lambda0, one entry per component.
    """
    return hawkes_mean_intensity(params) + params.lambda0
