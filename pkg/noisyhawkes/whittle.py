"""Model specifications, spectral (Whittle) log-likelihood and its maximisation."""

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np
from scipy.optimize import minimize

from .events import EventSeries
from .exceptions import FitError, SpectralEvaluationError
from .logger import logger
from .params import NoisyHawkesParams, mean_intensity
from .spectral import (
    TWO_PI,
    Periodogram,
    exponential_kernel,
    periodogram,
    spectral_density_biv,
    spectral_density_general,
    spectral_density_uni,
)
from .utils import check_random_state, spectral_radius

FREE = "free"
FIXED = "fixed"
ZERO = "zero"
_STATUSES = (FREE, FIXED, ZERO)

DEFAULT_BOUNDS = {
    "mu": (1e-6, 20.0),
    "alpha": (0.0, 1.0 - 1e-6),
    "beta": (1e-4, 50.0),
    "lambda0": (1e-6, 20.0),
}
UNIVARIATE_ALPHA_BOUNDS = (1e-6, 1.0 - 1e-6)
NULL_THRESHOLD = 1e-4
_BAD_VALUE = 1e10
_UNIVARIATE_MODELS = {"mu": "Q_mu", "alpha": "Q_alpha", "beta": "Q_beta", "lambda0": "Q_lambda0"}


def _slot_names(d: int) -> List[str]:
    names = [f"mu[{i}]" for i in range(d)]
    names += [f"alpha[{i},{j}]" for i in range(d) for j in range(d)]
    names += [f"beta[{i}]" for i in range(d)]
    names.append("lambda0")
    return names


def _slot_group(name: str) -> str:
    return name.split("[")[0]


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    Which entries of theta = (mu, alpha, beta, lambda0) are estimated.

    Slots are ordered mu[0..d-1], alpha row-major, beta[0..d-1], lambda0.
    Each slot is "free", "fixed" (held at ``values[slot]``) or "zero". A row
    of alpha made entirely of zero slots pins the matching beta to 1, since
    that decay rate does not enter the spectrum.

    Attributes:
        d: Dimension.
        status: Status of each slot.
        values: Values of fixed and zero slots (entries of free slots are ignored).
        bounds: Array (n_slots, 2) of closed intervals, used for free slots.
        name: Label carried into results.
    """

    d: int
    status: tuple
    values: np.ndarray
    bounds: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        d = self.d
        n = 2 * d + d * d + 1
        status = tuple(self.status)
        values = np.asarray(self.values, dtype=float).copy()
        bounds = np.asarray(self.bounds, dtype=float).copy()
        if d < 1:
            raise ValueError(f"d must be at least 1, got {d}")
        if len(status) != n or values.shape != (n,) or bounds.shape != (n, 2):
            raise ValueError(f"a {d}-dimensional model needs {n} slots")
        bad = [s for s in status if s not in _STATUSES]
        if bad:
            raise ValueError(f"slot status must be one of {_STATUSES}, got {bad}")

        status = list(status)
        names = _slot_names(d)
        for k, s in enumerate(status):
            if s == ZERO:
                if _slot_group(names[k]) != "alpha" and names[k] != "lambda0":
                    raise ValueError(f"only alpha entries and lambda0 can be zero, got {names[k]}")
                values[k] = 0.0
        # rows of alpha that are structurally zero pin their beta to 1
        for i in range(d):
            row = [status[d + i * d + j] for j in range(d)]
            beta_slot = d + d * d + i
            if all(s == ZERO for s in row) and not (
                status[beta_slot] == FIXED and values[beta_slot] == 1.0
            ):
                logger.debug(f"alpha row {i} is zero, pinning beta[{i}] to 1")
                status[beta_slot] = FIXED
                values[beta_slot] = 1.0
        if FREE not in status:
            raise ValueError("model must contain at least one free parameter")
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError("every lower bound must not exceed its upper bound")

        for k, s in enumerate(status):
            if s != FIXED:
                continue
            group, v = _slot_group(names[k]), values[k]
            if not np.isfinite(v) or v < 0 or (group == "beta" and v <= 0):
                raise ValueError(f"fixed value of {names[k]} is not admissible: {v}")
        fixed_alpha = np.where(
            np.array([s == FIXED for s in status[d : d + d * d]]), values[d : d + d * d], 0.0
        ).reshape(d, d)
        if spectral_radius(fixed_alpha) >= 1:
            raise ValueError("fixed alpha entries already have spectral radius >= 1")

        values.setflags(write=False)
        bounds.setflags(write=False)
        object.__setattr__(self, "status", tuple(status))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bounds", bounds)

    # -- structure -----------------------------------------------------------

    @property
    def slot_names(self) -> List[str]:
        return _slot_names(self.d)

    @property
    def free_indices(self) -> np.ndarray:
        return np.array([k for k, s in enumerate(self.status) if s == FREE], dtype=int)

    @property
    def n_free(self) -> int:
        return int(self.free_indices.size)

    @property
    def free_names(self) -> List[str]:
        names = self.slot_names
        return [names[k] for k in self.free_indices]

    @property
    def free_bounds(self) -> np.ndarray:
        return self.bounds[self.free_indices]

    @property
    def support_mask(self) -> np.ndarray:
        d = self.d
        return np.array([s != ZERO for s in self.status[d : d + d * d]]).reshape(d, d)

    def alpha_status(self) -> np.ndarray:
        d = self.d
        return np.array(self.status[d : d + d * d]).reshape(d, d)

    # -- packing -------------------------------------------------------------

    def full_vector(self, x_free) -> np.ndarray:
        vec = np.array(self.values, dtype=float)
        vec[self.free_indices] = np.asarray(x_free, dtype=float)
        return vec

    def to_params(self, x_free, validate: bool = True) -> NoisyHawkesParams:
        """Parameter tuple with free slots taken from ``x_free`` and the rest from the spec."""
        d = self.d
        vec = self.full_vector(x_free)
        return NoisyHawkesParams(
            mu=vec[:d],
            alpha=vec[d : d + d * d].reshape(d, d),
            beta=vec[d + d * d : 2 * d + d * d],
            lambda0=vec[-1],
            validate=validate,
        )

    def vector(self, theta: NoisyHawkesParams) -> np.ndarray:
        if theta.d != self.d:
            raise ValueError(f"expected d={self.d}, got d={theta.d}")
        return np.concatenate([theta.mu, theta.alpha.ravel(), theta.beta, [theta.lambda0]])

    def free_vector(self, theta: NoisyHawkesParams) -> np.ndarray:
        return self.vector(theta)[self.free_indices]

    def conforms(self, theta: NoisyHawkesParams) -> bool:
        """True if theta matches every fixed and zero slot bit for bit."""
        vec = self.vector(theta)
        fixed = np.array([s != FREE for s in self.status])
        return bool(np.array_equal(vec[fixed], np.asarray(self.values)[fixed]))

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "d": self.d,
            "slots": [
                {"name": n, "status": s, "value": float(v), "bounds": [float(lo), float(hi)]}
                for n, s, v, (lo, hi) in zip(self.slot_names, self.status, self.values, self.bounds)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ModelSpec":
        """
        Build a spec from a mapping.

        Accepted layouts:
            {"model": "Q_beta", "fixed_value": 1.0}
            {"d": 2, "support": [[1, 0], [1, 0]], "lambda0": 0.5}
            the output of ``to_dict``
        """
        if "slots" in data:
            slots = data["slots"]
            return cls(
                d=int(data["d"]),
                status=tuple(s["status"] for s in slots),
                values=np.array([s.get("value", 0.0) for s in slots]),
                bounds=np.array([s["bounds"] for s in slots]),
                name=data.get("name", "custom"),
            )
        if "model" in data:
            model = data["model"]
            reverse = {v: k for k, v in _UNIVARIATE_MODELS.items()}
            if model in reverse:
                return univariate_model(reverse[model], data.get("fixed_value", 1.0))
            if model == "Q":
                return full_model(int(data.get("d", 1)), lambda0=data.get("lambda0"))
            raise ValueError(f"Unknown model: {model}")
        if "support" in data:
            return support_model(
                np.asarray(data["support"], dtype=bool),
                lambda0=data.get("lambda0"),
                name=data.get("name"),
            )
        if "d" in data:
            return full_model(int(data["d"]), lambda0=data.get("lambda0"))
        raise ValueError("model mapping needs one of 'slots', 'model', 'support' or 'd'")


def _default_bounds(d: int, univariate_alpha: bool = False) -> np.ndarray:
    rows = []
    for name in _slot_names(d):
        group = _slot_group(name)
        if group == "alpha" and univariate_alpha:
            rows.append(UNIVARIATE_ALPHA_BOUNDS)
        else:
            rows.append(DEFAULT_BOUNDS[group])
    return np.array(rows, dtype=float)


def full_model(d: int, lambda0: Optional[float] = None) -> ModelSpec:
    """Model with every parameter free; ``lambda0`` given means known noise."""
    n = 2 * d + d * d + 1
    status = [FREE] * n
    values = np.zeros(n)
    if lambda0 is not None:
        status[-1] = FIXED
        values[-1] = lambda0
    return ModelSpec(
        d=d,
        status=tuple(status),
        values=values,
        bounds=_default_bounds(d, univariate_alpha=(d == 1)),
        name="Q" if lambda0 is None else "Q_known_noise",
    )


def univariate_model(fixed: Optional[str] = "beta", value: float = 1.0) -> ModelSpec:
    """
    Univariate model with one parameter held fixed.

    Parameters:
        fixed (str): One of "mu", "alpha", "beta", "lambda0", or None for the
            full (non-identifiable) model.
        value (float): Value of the fixed parameter.
    """
    if fixed is None:
        return full_model(1)
    if fixed not in _UNIVARIATE_MODELS:
        raise ValueError(f"fixed must be one of {list(_UNIVARIATE_MODELS)}, got {fixed}")
    if fixed == "alpha" and not 0 < value < 1:
        raise ValueError(f"fixed alpha must be in (0, 1), got {value}")
    status = [FREE] * 4
    values = np.zeros(4)
    k = ["mu", "alpha", "beta", "lambda0"].index(fixed)
    status[k] = FIXED
    values[k] = value
    return ModelSpec(
        d=1,
        status=tuple(status),
        values=values,
        bounds=_default_bounds(1, univariate_alpha=True),
        name=_UNIVARIATE_MODELS[fixed],
    )


def support_model(mask, lambda0: Optional[float] = None, name: Optional[str] = None) -> ModelSpec:
    """
    Model whose alpha entries outside ``mask`` are structurally zero.

    Rows left empty by the mask get their beta pinned to 1.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
        raise ValueError(f"support mask must be square, got shape {mask.shape}")
    d = mask.shape[0]
    n = 2 * d + d * d + 1
    status = [FREE] * n
    values = np.zeros(n)
    for i in range(d):
        for j in range(d):
            if not mask[i, j]:
                status[d + i * d + j] = ZERO
    if lambda0 is not None:
        status[-1] = FIXED
        values[-1] = lambda0
    label = name or "Q_support[" + ";".join("".join("1" if v else "0" for v in r) for r in mask) + "]"
    return ModelSpec(
        d=d,
        status=tuple(status),
        values=values,
        bounds=_default_bounds(d),
        name=label,
    )


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def frequency_count(policy: Union[str, int], events) -> int:
    """
    Number of periodogram frequencies M.

    Parameters:
        policy: "n" (M = N), "nlogn" / "n_log_n" (M = ceil(N ln N)) or an integer.
        events (EventSeries): Observed series, N = total event count.

    Returns:
        int: M >= 1.
    """
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        if policy < 1:
            raise ValueError(f"explicit M must be a positive integer, got {policy}")
        return int(policy)
    if isinstance(policy, str) and policy.isdigit():
        return frequency_count(int(policy), events)
    if policy not in ("n", "nlogn", "n_log_n"):
        raise ValueError(f"M policy must be 'n', 'nlogn' or an integer, got {policy}")

    n = events.n_events
    if n == 0:
        logger.error("Cannot derive M from an empty event series")
        raise ValueError("events must be nonempty for a data-driven M policy")
    if policy == "n":
        return n
    return max(1, math.ceil(n * math.log(n)))


def _check_grid(pg: Periodogram):
    expected = np.arange(1, pg.M + 1) / pg.horizon
    if not np.allclose(pg.freqs, expected, rtol=1e-12, atol=0.0):
        raise ValueError("periodogram frequencies must be k / T for k = 1..M")


def _loglik_univariate(theta: NoisyHawkesParams, pg: Periodogram) -> float:
    f = spectral_density_uni(theta, pg.freqs)
    if np.any(~np.isfinite(f)) or np.any(f <= 0):
        raise SpectralEvaluationError("univariate spectral density is not positive")
    i_k = np.real(pg.values[:, 0, 0])
    return float(-np.sum(np.log(f) + i_k / f) / pg.horizon)


def _loglik_bivariate(theta: NoisyHawkesParams, pg: Periodogram) -> float:
    f = spectral_density_biv(theta, pg.freqs).values
    f11, f22, f12 = np.real(f[:, 0, 0]), np.real(f[:, 1, 1]), f[:, 0, 1]
    det = f11 * f22 - np.abs(f12) ** 2
    if np.any(~np.isfinite(det)) or np.any(det <= 0) or np.any(f11 <= 0):
        raise SpectralEvaluationError("bivariate spectral matrix is not positive definite")
    i11, i22, i12 = np.real(pg.values[:, 0, 0]), np.real(pg.values[:, 1, 1]), pg.values[:, 0, 1]
    trace = (f22 * i11 + f11 * i22 - 2.0 * np.real(f12 * np.conj(i12))) / det
    return float(-np.sum(np.log(det) + trace) / pg.horizon)


def _loglik_matrix(theta: NoisyHawkesParams, pg: Periodogram) -> float:
    f = spectral_density_general(
        theta.mu, exponential_kernel(theta.alpha, theta.beta), theta.lambda0, pg.freqs
    ).values
    try:
        chol = np.linalg.cholesky(f)
    except np.linalg.LinAlgError as exc:
        raise SpectralEvaluationError(f"spectral matrix is not positive definite: {exc}") from exc
    logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)
    trace = np.real(np.trace(np.linalg.solve(f, pg.values), axis1=-2, axis2=-1))
    return float(-np.sum(logdet + trace) / pg.horizon)


def spectral_loglik(
    spec: ModelSpec, theta: NoisyHawkesParams, pg: Periodogram, method: str = "auto"
) -> float:
    """
    Spectral log-likelihood -(1/T) sum_k [log det f(nu_k) + tr(f(nu_k)^{-1} I(nu_k))].

    Parameters:
        spec (ModelSpec): Model theta belongs to.
        theta (NoisyHawkesParams): Parameters at which to evaluate.
        pg (Periodogram): Periodogram on the grid k / T.
        method (str): "auto" uses closed forms for d <= 2, "matrix" always
            goes through the general matrix formula.

    Raises:
        SpectralEvaluationError: If f is not positive definite at some frequency.
    """
    if theta.d != spec.d or pg.d != spec.d:
        raise ValueError(f"dimension mismatch: spec d={spec.d}, theta d={theta.d}, pg d={pg.d}")
    if method not in ("auto", "matrix"):
        raise ValueError(f"method must be 'auto' or 'matrix', got {method}")
    _check_grid(pg)
    if spectral_radius(theta.alpha) >= 1:
        raise SpectralEvaluationError("spectral radius of alpha is >= 1")
    if method == "matrix" or spec.d > 2:
        return _loglik_matrix(theta, pg)
    if spec.d == 1:
        return _loglik_univariate(theta, pg)
    return _loglik_bivariate(theta, pg)


def _univariate_density_gradient(theta: NoisyHawkesParams, nu: np.ndarray) -> np.ndarray:
    """Partial derivatives of the univariate density, shape (4, n), order (mu, alpha, beta, lambda0)."""
    mu, alpha, beta = theta.mu[0], theta.alpha[0, 0], theta.beta[0]
    q = TWO_PI**2 * nu**2
    den = beta**2 * (1 - alpha) ** 2 + q
    kappa = mu * beta**2 * alpha * (2 - alpha) / (1 - alpha)
    d_kappa_alpha = mu * beta**2 * (2 - 2 * alpha + alpha**2) / (1 - alpha) ** 2
    d_den_alpha = -2 * beta**2 * (1 - alpha)
    d_den_beta = 2 * beta * (1 - alpha) ** 2
    grad = np.empty((4, nu.size))
    grad[0] = kappa / mu / den + 1 / (1 - alpha)
    grad[1] = d_kappa_alpha / den - kappa * d_den_alpha / den**2 + mu / (1 - alpha) ** 2
    grad[2] = 2 * kappa / beta / den - kappa * d_den_beta / den**2
    grad[3] = 1.0
    return grad


def loglik_gradient(spec: ModelSpec, theta: NoisyHawkesParams, pg: Periodogram) -> np.ndarray:
    """Analytic gradient of the univariate log-likelihood with respect to the free slots."""
    if spec.d != 1:
        raise NotImplementedError("analytic gradients are only available for d = 1")
    _check_grid(pg)
    f = spectral_density_uni(theta, pg.freqs)
    i_k = np.real(pg.values[:, 0, 0])
    weight = 1.0 / f - i_k / f**2
    full = -(_univariate_density_gradient(theta, pg.freqs) @ weight) / pg.horizon
    return full[spec.free_indices]


# ---------------------------------------------------------------------------
# Optimisation
# ---------------------------------------------------------------------------


@dataclass
class FitConfig:
    """
    Optimiser settings of ``fit``.

    Attributes:
        n_restarts: Number of starting points (the first is moment based).
        m_policy: Frequency count policy, see ``frequency_count``.
        max_iter: Iteration cap per restart.
        pgtol: Projected-gradient tolerance.
        ftol: Relative objective change tolerance.
        seed: Seed of the restart sampler.
        gradient: "auto" (analytic when available), "analytic" or "finite-difference".
        radius_margin: Iterates with spectral radius >= 1 - radius_margin are penalised.
        penalty_weight: Weight of the quadratic radius penalty.
        periodogram_method: Passed to ``periodogram``.
    """

    n_restarts: int = 5
    m_policy: Union[str, int] = "n"
    max_iter: int = 500
    pgtol: float = 1e-6
    ftol: float = 1e-10
    seed: Optional[int] = None
    gradient: str = "auto"
    radius_margin: float = 1e-6
    penalty_weight: float = 1e4
    periodogram_method: str = "auto"

    def __post_init__(self):
        if not isinstance(self.n_restarts, (int, np.integer)) or self.n_restarts < 1:
            raise ValueError(f"n_restarts must be a positive integer, got {self.n_restarts}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.gradient not in ("auto", "analytic", "finite-difference"):
            raise ValueError(
                f"gradient must be 'auto', 'analytic' or 'finite-difference', got {self.gradient}"
            )


@dataclass
class RestartTrace:
    """Outcome of one optimiser restart."""

    init: List[float]
    final: List[float]
    loglik: float
    converged: bool
    iterations: int
    message: str = ""

    def to_dict(self) -> Dict:
        return {
            "init": list(self.init),
            "final": list(self.final),
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
        }


@dataclass
class FitResult:
    """
    Result of a Whittle fit.

    Attributes:
        theta_hat: Estimated parameters, conforming to ``spec``.
        loglik: Spectral log-likelihood at theta_hat.
        restarts: One trace per starting point.
        chosen_start: Index of the restart theta_hat comes from.
        M_used: Number of frequencies (summed over replicates).
        spec: The model that was fitted.
        converged: False when no restart converged and the best finite one was kept.
        boundary: Names of free slots that ended on a bound.
        runtime: Wall-clock seconds.
    """

    theta_hat: NoisyHawkesParams
    loglik: float
    restarts: List[RestartTrace]
    chosen_start: int
    M_used: int
    spec: ModelSpec
    converged: bool = True
    boundary: List[str] = field(default_factory=list)
    runtime: float = 0.0

    def free_estimates(self) -> Dict[str, float]:
        values = self.spec.free_vector(self.theta_hat)
        return dict(zip(self.spec.free_names, values.tolist()))

    def null_alpha_mask(self, threshold: float = NULL_THRESHOLD) -> np.ndarray:
        """Alpha entries estimated as null: at or below ``threshold`` or on the lower bound."""
        d = self.spec.d
        lower = self.spec.bounds[d : d + d * d, 0].reshape(d, d)
        alpha = self.theta_hat.alpha
        return (alpha <= threshold) | (alpha <= lower)

    def mean_intensity_estimate(self) -> np.ndarray:
        return mean_intensity(self.theta_hat)

    def to_dict(self, verbose: bool = False) -> Dict:
        out = {
            "model": self.spec.name,
            "theta_hat": self.theta_hat.to_dict(),
            "loglik": self.loglik,
            "chosen_start": self.chosen_start,
            "M_used": self.M_used,
            "converged": self.converged,
            "boundary": list(self.boundary),
            "n_restarts": len(self.restarts),
        }
        if verbose:
            out["spec"] = self.spec.to_dict()
            out["restarts"] = [r.to_dict() for r in self.restarts]
        return out


def _as_replicates(events) -> List[EventSeries]:
    if isinstance(events, EventSeries):
        return [events]
    replicates = list(events)
    if not replicates:
        raise ValueError("need at least one event series")
    return replicates


def _moment_start(spec: ModelSpec, replicates: List[EventSeries]) -> np.ndarray:
    d = spec.d
    rates = np.mean([ev.empirical_rates() for ev in replicates], axis=0)
    vec = np.array(spec.values, dtype=float)
    free = np.array([s == FREE for s in spec.status])

    alpha_free = free[d : d + d * d].reshape(d, d)
    alpha = vec[d : d + d * d].reshape(d, d).copy()
    alpha[alpha_free] = 0.3 if d == 1 else 0.25 / d
    beta = vec[d + d * d : 2 * d + d * d].copy()
    beta[free[d + d * d : 2 * d + d * d]] = 1.0
    lam = vec[-1] if not free[-1] else 0.3 * max(float(np.min(rates)), 1e-3)
    mu = (np.eye(d) - alpha) @ np.maximum(rates - lam, 1e-3)
    mu_free = free[:d]
    vec[:d][mu_free] = mu[mu_free]
    vec[d : d + d * d] = alpha.ravel()
    vec[d + d * d : 2 * d + d * d] = beta
    vec[-1] = lam
    x = vec[spec.free_indices]
    bounds = spec.free_bounds
    return np.clip(x, bounds[:, 0], bounds[:, 1])


def _random_start(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    bounds = spec.free_bounds
    lo = np.maximum(bounds[:, 0], 1e-3)
    hi = np.maximum(bounds[:, 1], lo)
    x = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    x = np.clip(x, bounds[:, 0], bounds[:, 1])
    if spec.d > 1:
        theta = spec.to_params(x, validate=False)
        rho = spectral_radius(theta.alpha)
        if rho >= 0.9:
            free_alpha = np.array([n.startswith("alpha") for n in spec.free_names])
            x[free_alpha] *= 0.9 / rho * rng.uniform(0.5, 1.0)
            x = np.clip(x, bounds[:, 0], bounds[:, 1])
    return x


def _shrink_to_radius(spec: ModelSpec, x, limit: float):
    """
    Shrink the free alpha entries of ``x`` by a common factor until the
    spectral radius is below ``limit``; returns (x, radius before shrinking).
    Fixed and zero slots are left alone.
    """
    x = np.asarray(x, dtype=float)
    rho = spectral_radius(spec.to_params(x, validate=False).alpha)
    if spec.d == 1 or rho < limit:
        return x, rho
    free_alpha = np.array([n.startswith("alpha") for n in spec.free_names])
    target = limit * (1 - 1e-9)

    def radius(factor):
        y = x.copy()
        y[free_alpha] *= factor
        return spectral_radius(spec.to_params(y, validate=False).alpha), y

    fixed_alpha = np.array([s != FREE for s in spec.status[spec.d : spec.d + spec.d**2]])
    if not np.any(np.asarray(spec.values)[spec.d : spec.d + spec.d**2][fixed_alpha]):
        # radius is homogeneous in alpha when every nonzero entry is free
        return radius(target / rho)[1], rho
    # radius is monotone in the nonnegative entries
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if radius(mid)[0] <= target:
            lo = mid
        else:
            hi = mid
    return radius(lo)[1], rho


class _Objective:
    """Negative summed log-likelihood over replicates, as a function of the free slots."""

    def __init__(self, spec: ModelSpec, pgs: List[Periodogram], cfg: FitConfig):
        self.spec = spec
        self.pgs = pgs
        self.cfg = cfg
        self.n_evals = 0

    def theta(self, x) -> NoisyHawkesParams:
        return self.spec.to_params(x, validate=False)

    def __call__(self, x) -> float:
        self.n_evals += 1
        penalty = 0.0
        limit = 1.0 - self.cfg.radius_margin
        x, rho = _shrink_to_radius(self.spec, x, limit)
        if self.spec.d > 1 and rho >= limit:
            penalty = self.cfg.penalty_weight * (rho - limit) ** 2
        theta = self.theta(x)
        try:
            value = -sum(spectral_loglik(self.spec, theta, pg) for pg in self.pgs)
        except (SpectralEvaluationError, ValueError, FloatingPointError):
            return _BAD_VALUE
        if not np.isfinite(value):
            return _BAD_VALUE
        return value + penalty

    def gradient(self, x) -> np.ndarray:
        theta = self.theta(x)
        try:
            return -sum(loglik_gradient(self.spec, theta, pg) for pg in self.pgs)
        except (SpectralEvaluationError, ValueError, FloatingPointError):
            return np.zeros_like(np.asarray(x, dtype=float))


def _boundary_slots(spec: ModelSpec, x: np.ndarray) -> List[str]:
    bounds = spec.free_bounds
    tol = 1e-6 * np.maximum(bounds[:, 1] - bounds[:, 0], 1.0)
    hits = (x <= bounds[:, 0] + tol) | (x >= bounds[:, 1] - tol)
    return [name for name, hit in zip(spec.free_names, hits) if hit]


def fit(spec: ModelSpec, events, opt_cfg: Optional[FitConfig] = None) -> FitResult:
    """
    Maximise the spectral log-likelihood over the free slots of ``spec``.

    Runs ``n_restarts`` L-BFGS-B descents of the negative log-likelihood within
    the spec bounds (gradient by central finite differences unless an analytic
    one is available) and keeps the best converged one.

    Parameters:
        spec (ModelSpec): Model to fit.
        events (EventSeries or list of EventSeries): Observed data. Several
            replicates are fitted jointly by summing their log-likelihoods.
        opt_cfg (FitConfig): Optimiser settings.

    Returns:
        FitResult: Best restart plus the trace of every restart.

    Raises:
        FitError: If no restart reached a finite objective value.
    """
    cfg = opt_cfg or FitConfig()
    replicates = _as_replicates(events)
    for ev in replicates:
        if ev.d != spec.d:
            raise ValueError(f"events have d={ev.d}, model has d={spec.d}")
        if ev.is_empty():
            logger.error("Cannot fit an empty event series")
            raise ValueError("events must be nonempty")

    start = time.perf_counter()
    logger.info(
        f"Fitting model {spec.name} ({spec.n_free} free parameters) on {len(replicates)} series "
        f"with {cfg.n_restarts} restarts, M policy {cfg.m_policy}"
    )
    pgs = [
        periodogram(ev, frequency_count(cfg.m_policy, ev), method=cfg.periodogram_method)
        for ev in replicates
    ]
    m_used = int(sum(pg.M for pg in pgs))
    objective = _Objective(spec, pgs, cfg)

    use_analytic = cfg.gradient == "analytic" or (cfg.gradient == "auto" and spec.d == 1)
    if use_analytic and spec.d != 1:
        raise ValueError("analytic gradients are only available for d = 1")
    jac = objective.gradient if use_analytic else "3-point"

    rng = check_random_state(cfg.seed)
    bounds = [tuple(b) for b in spec.free_bounds]
    traces: List[RestartTrace] = []
    for r in range(cfg.n_restarts):
        x0 = _moment_start(spec, replicates) if r == 0 else _random_start(spec, rng)
        try:
            res = minimize(
                objective,
                x0,
                method="L-BFGS-B",
                jac=jac,
                bounds=bounds,
                options={"maxiter": cfg.max_iter, "gtol": cfg.pgtol, "ftol": cfg.ftol},
            )
            x = np.clip(res.x, spec.free_bounds[:, 0], spec.free_bounds[:, 1])
            value = objective(x)
            finite = value < _BAD_VALUE
            # status 2 is L-BFGS-B stopping at machine precision in the line search
            converged = bool(finite and res.status in (0, 2))
            trace = RestartTrace(
                init=x0.tolist(),
                final=x.tolist(),
                loglik=-value if finite else float("-inf"),
                converged=converged,
                iterations=int(res.nit),
                message=str(res.message),
            )
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            logger.debug(f"Restart {r} raised {exc!r}")
            trace = RestartTrace(
                init=x0.tolist(),
                final=x0.tolist(),
                loglik=float("-inf"),
                converged=False,
                iterations=0,
                message=f"error: {exc}",
            )
        logger.debug(
            f"Restart {r}: loglik={trace.loglik:.6g}, converged={trace.converged}, "
            f"iterations={trace.iterations}"
        )
        traces.append(trace)

    converged = [k for k, t in enumerate(traces) if t.converged]
    finite = [k for k, t in enumerate(traces) if np.isfinite(t.loglik)]
    if converged:
        chosen = max(converged, key=lambda k: traces[k].loglik)
        ok = True
    elif finite:
        chosen = max(finite, key=lambda k: traces[k].loglik)
        ok = False
        logger.warning(f"No restart converged for {spec.name}; keeping best finite restart {chosen}")
    else:
        logger.error(f"All {cfg.n_restarts} restarts failed for {spec.name}")
        raise FitError(
            f"all {cfg.n_restarts} restarts failed for model {spec.name}",
            traces=[t.to_dict() for t in traces],
        )

    x_best, _ = _shrink_to_radius(spec, traces[chosen].final, 1.0 - cfg.radius_margin)
    theta_hat = spec.to_params(x_best)
    boundary = _boundary_slots(spec, x_best)
    if boundary:
        logger.warning(f"Estimates on the boundary of the search box: {boundary}")
    runtime = time.perf_counter() - start
    logger.info(
        f"Fit of {spec.name} done in {runtime:.2f}s: loglik={traces[chosen].loglik:.6g}, "
        f"restart {chosen}"
    )
    return FitResult(
        theta_hat=theta_hat,
        loglik=traces[chosen].loglik,
        restarts=traces,
        chosen_start=chosen,
        M_used=m_used,
        spec=spec,
        converged=ok,
        boundary=boundary,
        runtime=runtime,
    )


def relative_error(
    theta_hat: NoisyHawkesParams, theta_true: NoisyHawkesParams, spec: ModelSpec
) -> float:
    """Euclidean error over the free slots divided by the norm of their true values."""
    est = spec.free_vector(theta_hat)
    true = spec.free_vector(theta_true)
    norm = np.linalg.norm(true)
    if norm == 0:
        raise ValueError("true free parameters have zero norm")
    return float(np.linalg.norm(est - true) / norm)

