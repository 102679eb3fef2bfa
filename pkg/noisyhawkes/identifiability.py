"""
Numerical witnesses of (non-)identifiability.

Equivalence maps build a second parameter tuple with exactly the same
spectral density as a given one; the injectivity probe samples parameter
pairs inside a model and measures how far apart their spectra are.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from .logger import logger
from .params import NoisyHawkesParams
from .spectral import RectParams, spectral_density_rect, spectral_matrix
from .utils import check_random_state, spectral_radius
from .whittle import (
    DEFAULT_BOUNDS,
    FREE,
    ModelSpec,
    full_model,
    support_model,
    univariate_model,
)

PROBE_GRID_SIZE = 512
PROBE_T_REF = 1000.0
PROBE_NU_MAX = 64.0
SEPARATION = 1e-2
DISCREPANCY_FLOOR = 1e-6

NON_IDENTIFIABLE_PATTERNS = ("diagonal", "second_row_zero", "first_row_zero")
IDENTIFIABLE_SUPPORTS = {
    "lambda1": ((True, False), (True, False)),
    "lambda2": ((False, True), (False, True)),
    "lambda3": ((True, False), (True, True)),
    "lambda4": ((True, True), (False, True)),
}

# box the probe samples free coordinates from
_PROBE_BOX = {
    "mu": (0.2, 3.0),
    "alpha": (0.05, 0.9),
    "beta": (0.2, 5.0),
    "lambda0": (0.05, 3.0),
    "phi": (0.2, 5.0),
}
_PROBE_MAX_RADIUS = 0.9


@dataclass(frozen=True)
class TauRange:
    """Open interval of admissible shifts tau, zero optionally excluded."""

    lo: float
    hi: float
    excludes_zero: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty tau range ({self.lo}, {self.hi})")

    def contains(self, tau: float) -> bool:
        if self.excludes_zero and tau == 0:
            return False
        return self.lo < tau < self.hi

    def sample(self, rng: np.random.Generator, shrink: float = 0.05) -> float:
        """Draw tau uniformly from the range shrunk by ``shrink`` of its width at both ends."""
        hi = self.hi if np.isfinite(self.hi) else self.lo + 10.0
        width = hi - self.lo
        while True:
            tau = rng.uniform(self.lo + shrink * width, hi - shrink * width)
            if tau != 0:
                return float(tau)


def _univariate_parts(theta: NoisyHawkesParams):
    if theta.d != 1:
        raise ValueError(f"expected a univariate parameter tuple, got d={theta.d}")
    mu, alpha, beta = theta.mu[0], theta.alpha[0, 0], theta.beta[0]
    if not mu > 0 or not 0 <= alpha < 1:
        raise ValueError(f"inadmissible univariate parameters mu={mu}, alpha={alpha}")
    return mu, alpha, beta, theta.lambda0


def uni_tau_range(theta: NoisyHawkesParams) -> TauRange:
    """Shifts (-lambda0, mu / (1 - alpha)) \\ {0} that keep the univariate map admissible."""
    mu, alpha, _, lambda0 = _univariate_parts(theta)
    return TauRange(lo=-lambda0, hi=mu / (1.0 - alpha))


def _shift_component(mu, alpha, beta, tau):
    """Univariate map on one component, noise excluded; returns (mu', alpha', beta')."""
    m = mu / (1.0 - alpha)
    if alpha == 0:
        return mu - tau, 0.0, beta
    kappa = m * beta**2 * alpha * (2.0 - alpha)
    s = np.sqrt(beta**2 * (1.0 - alpha) ** 2 + kappa / (m - tau))
    mu_new = beta * (1.0 - alpha) * (m - tau) / s
    alpha_new = 1.0 - beta * (1.0 - alpha) / s
    return mu_new, alpha_new, s


def uni_equivalent(theta: NoisyHawkesParams, tau: float) -> NoisyHawkesParams:
    """
    Univariate parameters with the same spectral density as ``theta``.

    Moving an amount tau of mean intensity from the Hawkes part to the noise
    (lambda0' = lambda0 + tau) and solving for (mu', alpha', beta') keeps the
    constant term m + lambda0, the pole beta (1 - alpha) and the residue of
    the density unchanged.

    Parameters:
        theta (NoisyHawkesParams): Univariate parameters.
        tau (float): Shift in ``uni_tau_range(theta)``; 0 returns theta.

    Returns:
        NoisyHawkesParams: Equivalent parameters.
    """
    if tau == 0:
        return theta
    rng = uni_tau_range(theta)
    if not rng.contains(tau):
        logger.error(f"tau={tau} outside admissible range ({rng.lo}, {rng.hi})")
        raise ValueError(f"tau must lie in ({rng.lo}, {rng.hi}) without 0, got {tau}")
    mu, alpha, beta, lambda0 = _univariate_parts(theta)
    mu_new, alpha_new, beta_new = _shift_component(mu, alpha, beta, tau)
    return NoisyHawkesParams.univariate(mu_new, alpha_new, beta_new, lambda0 + tau)


def _check_diagonal(theta: NoisyHawkesParams):
    if theta.d != 2:
        raise ValueError(f"expected a bivariate parameter tuple, got d={theta.d}")
    if theta.alpha[0, 1] != 0 or theta.alpha[1, 0] != 0:
        raise ValueError("alpha must be diagonal")
    if np.any(theta.alpha.diagonal() >= 1) or np.any(theta.mu <= 0):
        raise ValueError("inadmissible diagonal parameters")


def biv_tau_range_diag(theta: NoisyHawkesParams) -> TauRange:
    """Shifts (-lambda0, min_i mu_i / (1 - alpha_ii)) \\ {0} for a diagonal alpha."""
    _check_diagonal(theta)
    hi = float(np.min(theta.mu / (1.0 - theta.alpha.diagonal())))
    return TauRange(lo=-theta.lambda0, hi=hi)


def biv_equivalent_diag(theta: NoisyHawkesParams, tau: float) -> NoisyHawkesParams:
    """Component-wise univariate map for a bivariate model with diagonal alpha."""
    rng = biv_tau_range_diag(theta)
    if tau == 0:
        return theta
    if not rng.contains(tau):
        logger.error(f"tau={tau} outside admissible range ({rng.lo}, {rng.hi})")
        raise ValueError(f"tau must lie in ({rng.lo}, {rng.hi}) without 0, got {tau}")
    mu, alpha, beta = [], np.zeros((2, 2)), []
    for i in range(2):
        m_i, a_i, b_i = _shift_component(theta.mu[i], theta.alpha[i, i], theta.beta[i], tau)
        mu.append(m_i)
        alpha[i, i] = a_i
        beta.append(b_i)
    return NoisyHawkesParams(mu=mu, alpha=alpha, beta=beta, lambda0=theta.lambda0 + tau)


def _swap(theta: NoisyHawkesParams) -> NoisyHawkesParams:
    return NoisyHawkesParams(
        mu=theta.mu[::-1],
        alpha=theta.alpha[::-1, ::-1],
        beta=theta.beta[::-1],
        lambda0=theta.lambda0,
    )


def _zero_row(theta: NoisyHawkesParams) -> int:
    """Index of the zero row of a bivariate alpha whose other row is fully positive."""
    if theta.d != 2:
        raise ValueError(f"expected a bivariate parameter tuple, got d={theta.d}")
    a = theta.alpha
    if a[1, 0] == 0 and a[1, 1] == 0 and a[0, 0] > 0 and a[0, 1] > 0:
        return 1
    if a[0, 0] == 0 and a[0, 1] == 0 and a[1, 0] > 0 and a[1, 1] > 0:
        return 0
    raise ValueError("alpha must have one zero row and a fully positive other row")


def row_constants(theta: NoisyHawkesParams) -> Dict[str, float]:
    """
    Constants A..E that determine the spectrum when the second row of alpha is zero.

        f = [[E / (C^2 + 4 pi^2 nu^2) + D, B / (C + 2 pi i nu)],
             [B / (C - 2 pi i nu),         A                 ]]

    A zero first row is handled by swapping the components first.
    """
    if _zero_row(theta) == 0:
        theta = _swap(theta)
    mu1, mu2 = theta.mu
    a11, a12 = theta.alpha[0]
    beta1 = theta.beta[0]
    m1 = (mu1 + mu2 * a12) / (1.0 - a11)
    return {
        "A": mu2 + theta.lambda0,
        "B": mu2 * beta1 * a12,
        "C": beta1 * (1.0 - a11),
        "D": m1 + theta.lambda0,
        "E": m1 * beta1**2 * a11 * (2.0 - a11) + mu2 * beta1**2 * a12**2,
    }


def _row_tau_bound(mu1, mu2, a11, a12) -> float:
    p = (mu1 + mu2 * a12) * a11 * (2.0 - a11)
    return p * mu2 / (p + mu2 * (1.0 - a11) * a12**2)


def biv_tau_range_row(theta: NoisyHawkesParams) -> TauRange:
    """Admissible shifts of the zero-row map."""
    if _zero_row(theta) == 0:
        theta = _swap(theta)
    mu1, mu2 = theta.mu
    a11, a12 = theta.alpha[0]
    hi = min(mu1 / (1.0 - a11), mu2, _row_tau_bound(mu1, mu2, a11, a12))
    return TauRange(lo=-theta.lambda0, hi=hi)


def biv_equivalent_row(theta: NoisyHawkesParams, tau: float) -> NoisyHawkesParams:
    """
    Equivalent bivariate parameters when one row of alpha is zero.

    For a zero second row, with r = sqrt((1 - a11)^2 + kappa) and
        kappa = [(mu1 + mu2 a12) a11 (2 - a11) (mu2 - tau) - tau mu2 a12^2 (1 - a11)]
                / [(mu2 - tau) (mu1 + mu2 a12 - tau (1 - a11))]
    the map is mu1' = (mu1 - tau (1 - a11)) / r, mu2' = mu2 - tau,
    a11' = 1 - (1 - a11) / r, a12' = mu2 a12 / ((mu2 - tau) r), beta1' = beta1 r,
    lambda0' = lambda0 + tau. It leaves the constants A..E of ``row_constants``
    unchanged. A zero first row is handled by symmetry.
    """
    if tau == 0:
        _zero_row(theta)
        return theta
    if _zero_row(theta) == 0:
        return _swap(biv_equivalent_row(_swap(theta), tau))

    rng = biv_tau_range_row(theta)
    if not rng.contains(tau):
        logger.error(f"tau={tau} outside admissible range ({rng.lo}, {rng.hi})")
        raise ValueError(f"tau must lie in ({rng.lo}, {rng.hi}) without 0, got {tau}")

    mu1, mu2 = theta.mu
    a11, a12 = theta.alpha[0]
    beta1, beta2 = theta.beta
    num = (mu1 + mu2 * a12) * a11 * (2.0 - a11) * (mu2 - tau) - tau * mu2 * a12**2 * (1.0 - a11)
    den = (mu2 - tau) * (mu1 + mu2 * a12 - tau * (1.0 - a11))
    kappa = num / den
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    r = np.sqrt((1.0 - a11) ** 2 + kappa)
    alpha = np.array([[1.0 - (1.0 - a11) / r, mu2 * a12 / ((mu2 - tau) * r)], [0.0, 0.0]])
    return NoisyHawkesParams(
        mu=[(mu1 - tau * (1.0 - a11)) / r, mu2 - tau],
        alpha=alpha,
        beta=[beta1 * r, beta2],
        lambda0=theta.lambda0 + tau,
    )


def classify_support(mask) -> str:
    """
    Label a 2x2 interaction support.

    Returns one of "lambda1".."lambda4" (identifiable supports), "diagonal",
    "second_row_zero", "first_row_zero" (non-identifiable) or "unclassified".
    """
    m = np.asarray(mask, dtype=bool)
    if m.shape != (2, 2):
        return "unclassified"
    if not m[0, 1] and not m[1, 0]:
        return "diagonal"
    if m[0, 0] and m[0, 1] and not m[1, 0] and not m[1, 1]:
        return "second_row_zero"
    if m[1, 0] and m[1, 1] and not m[0, 0] and not m[0, 1]:
        return "first_row_zero"
    if m[1, 0] and not m[0, 1] and not m[1, 1]:
        return "lambda1"
    if m[0, 1] and not m[0, 0] and not m[1, 0]:
        return "lambda2"
    if m[0, 0] and m[1, 0] and not m[0, 1]:
        return "lambda3"
    if m[0, 1] and m[1, 1] and not m[1, 0]:
        return "lambda4"
    return "unclassified"


def is_non_identifiable_support(mask) -> bool:
    return classify_support(mask) in NON_IDENTIFIABLE_PATTERNS


# ---------------------------------------------------------------------------
# Injectivity probe
# ---------------------------------------------------------------------------


@dataclass
class ProbeReport:
    """
    Spectral discrepancies between sampled parameter pairs of one model.

    Attributes:
        model: Model label.
        mode: "random" (independent pairs) or "equivalent" (pairs from an equivalence map).
        discrepancies: Max-over-frequency relative spectral deviation of each pair.
        distances: Normalized parameter distance of each pair.
        pairs: Parameter pairs as dicts, kept when requested.
    """

    model: str
    mode: str
    discrepancies: List[float]
    distances: List[float]
    pairs: List[Dict] = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return len(self.discrepancies)

    def separated(self) -> np.ndarray:
        return np.asarray(self.distances) >= SEPARATION

    @property
    def min_discrepancy(self) -> float:
        return float(np.min(self.discrepancies))

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.discrepancies))

    @property
    def min_separated_discrepancy(self) -> Optional[float]:
        sep = self.separated()
        if not np.any(sep):
            return None
        return float(np.min(np.asarray(self.discrepancies)[sep]))

    @property
    def injective(self) -> bool:
        """Every separated pair has spectra at least ``DISCREPANCY_FLOOR`` apart."""
        value = self.min_separated_discrepancy
        return value is None or value >= DISCREPANCY_FLOOR

    def to_dict(self, verbose: bool = False) -> Dict:
        out = {
            "model": self.model,
            "mode": self.mode,
            "n_pairs": self.n_pairs,
            "n_separated": int(np.sum(self.separated())),
            "min_discrepancy": self.min_discrepancy,
            "max_discrepancy": self.max_discrepancy,
            "min_separated_discrepancy": self.min_separated_discrepancy,
            "injective": self.injective,
        }
        if verbose:
            out["discrepancies"] = list(self.discrepancies)
            out["distances"] = list(self.distances)
            out["pairs"] = list(self.pairs)
        return out


def probe_grid() -> np.ndarray:
    """512 log-spaced frequencies on [1/1000, 64]."""
    return np.geomspace(1.0 / PROBE_T_REF, PROBE_NU_MAX, PROBE_GRID_SIZE)


def spectral_discrepancy(f: np.ndarray, g: np.ndarray) -> float:
    """Max entrywise relative deviation |f - g| / max(|f|, |g|); 0 where both vanish."""
    diff = np.abs(f - g)
    scale = np.maximum(np.abs(f), np.abs(g))
    rel = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
    return float(np.max(rel))


_NAMED_MODELS = {
    "Q_mu": lambda: univariate_model("mu", 1.0),
    "Q_alpha": lambda: univariate_model("alpha", 0.5),
    "Q_beta": lambda: univariate_model("beta", 1.0),
    "Q_lambda0": lambda: univariate_model("lambda0", 1.0),
    "Q": lambda: full_model(1),
    "lambda1": lambda: support_model(IDENTIFIABLE_SUPPORTS["lambda1"], name="lambda1"),
    "lambda2": lambda: support_model(IDENTIFIABLE_SUPPORTS["lambda2"], name="lambda2"),
    "lambda3": lambda: support_model(IDENTIFIABLE_SUPPORTS["lambda3"], name="lambda3"),
    "lambda4": lambda: support_model(IDENTIFIABLE_SUPPORTS["lambda4"], name="lambda4"),
    "diagonal": lambda: support_model(np.eye(2, dtype=bool), name="diagonal"),
    "second_row_zero": lambda: support_model([[True, True], [False, False]], name="second_row_zero"),
    "first_row_zero": lambda: support_model([[False, False], [True, True]], name="first_row_zero"),
}
PROBE_MODELS = tuple(_NAMED_MODELS) + ("union", "R")


def _sample_spec(spec: ModelSpec, rng: np.random.Generator) -> NoisyHawkesParams:
    d = spec.d
    names = spec.slot_names
    for _ in range(1000):
        vec = np.array(spec.values, dtype=float)
        for k, status in enumerate(spec.status):
            if status == FREE:
                lo, hi = _PROBE_BOX[names[k].split("[")[0]]
                vec[k] = rng.uniform(lo, hi)
        alpha = vec[d : d + d * d].reshape(d, d)
        if d == 1 or spectral_radius(alpha) < _PROBE_MAX_RADIUS:
            return spec.to_params(vec[spec.free_indices])
    raise RuntimeError(f"could not sample a stationary parameter for model {spec.name}")


def _normalized_vector(theta) -> np.ndarray:
    if isinstance(theta, RectParams):
        return np.array(
            [
                theta.mu / (DEFAULT_BOUNDS["mu"][1] - DEFAULT_BOUNDS["mu"][0]),
                theta.alpha,
                theta.phi / (DEFAULT_BOUNDS["beta"][1] - DEFAULT_BOUNDS["beta"][0]),
                theta.lambda0 / (DEFAULT_BOUNDS["lambda0"][1] - DEFAULT_BOUNDS["lambda0"][0]),
            ]
        )
    width = {k: hi - lo for k, (lo, hi) in DEFAULT_BOUNDS.items()}
    return np.concatenate(
        [
            theta.mu / width["mu"],
            theta.alpha.ravel() / width["alpha"],
            theta.beta / width["beta"],
            [theta.lambda0 / width["lambda0"]],
        ]
    )


def _density(theta, grid: np.ndarray) -> np.ndarray:
    if isinstance(theta, RectParams):
        return np.asarray(spectral_density_rect(theta, grid))
    return spectral_matrix(theta, grid)


def _sample_rect(rng: np.random.Generator) -> RectParams:
    return RectParams(
        mu=rng.uniform(*_PROBE_BOX["mu"]),
        alpha=rng.uniform(*_PROBE_BOX["alpha"]),
        phi=rng.uniform(*_PROBE_BOX["phi"]),
        lambda0=rng.uniform(*_PROBE_BOX["lambda0"]),
    )


def _equivalent_pair(label: str, theta: NoisyHawkesParams, rng: np.random.Generator):
    if label == "Q":
        return uni_equivalent(theta, uni_tau_range(theta).sample(rng))
    if label == "diagonal":
        return biv_equivalent_diag(theta, biv_tau_range_diag(theta).sample(rng))
    if label in ("second_row_zero", "first_row_zero"):
        return biv_equivalent_row(theta, biv_tau_range_row(theta).sample(rng))
    raise ValueError(f"no equivalence map for model {label}")


def _resolve_model(model: Union[str, ModelSpec]):
    if isinstance(model, ModelSpec):
        if model.d == 1:
            return model.name, model
        if model.d != 2:
            raise ValueError(f"unsupported model dimension {model.d}")
        label = classify_support(model.support_mask)
        if label == "unclassified":
            raise ValueError(f"unsupported support {model.support_mask.tolist()}")
        return label, model
    if model in _NAMED_MODELS:
        return model, _NAMED_MODELS[model]()
    if model in ("union", "R"):
        return model, None
    raise ValueError(f"Unknown probe model: {model}. Available models: {list(PROBE_MODELS)}")


def injectivity_probe(
    model: Union[str, ModelSpec],
    n_pairs: int = 500,
    seed: Optional[int] = None,
    mode: str = "random",
    keep_pairs: bool = False,
) -> ProbeReport:
    """
    Sample parameter pairs inside a model and compare their spectral densities.

    Parameters:
        model: A ModelSpec or one of ``PROBE_MODELS`` ("Q_mu", "Q_alpha",
            "Q_beta", "Q_lambda0", "lambda1".."lambda4", "union" of the four,
            "R" for the rectangle kernel, and the non-identifiable "Q",
            "diagonal", "second_row_zero", "first_row_zero").
        n_pairs (int): Number of pairs.
        seed (int): Seed of the sampler.
        mode (str): "random" draws both members independently; "equivalent"
            builds the second member with an equivalence map.
        keep_pairs (bool): Store the sampled pairs in the report.

    Returns:
        ProbeReport: Per-pair discrepancies and normalized distances.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be positive, got {n_pairs}")
    if mode not in ("random", "equivalent"):
        raise ValueError(f"mode must be 'random' or 'equivalent', got {mode}")
    label, spec = _resolve_model(model)
    rng = check_random_state(seed)
    grid = probe_grid()
    logger.info(f"Probing model {label} with {n_pairs} {mode} pairs")

    union_specs = [_NAMED_MODELS[name]() for name in IDENTIFIABLE_SUPPORTS]

    def draw():
        if label == "R":
            return _sample_rect(rng)
        if label == "union":
            return _sample_spec(union_specs[rng.integers(len(union_specs))], rng)
        return _sample_spec(spec, rng)

    discrepancies, distances, pairs = [], [], []
    for _ in range(n_pairs):
        theta = draw()
        if mode == "equivalent":
            other = _equivalent_pair(label, theta, rng)
        else:
            other = draw()
        discrepancies.append(spectral_discrepancy(_density(theta, grid), _density(other, grid)))
        distances.append(
            float(np.linalg.norm(_normalized_vector(theta) - _normalized_vector(other)))
        )
        if keep_pairs:
            pairs.append({"theta": _as_dict(theta), "theta_prime": _as_dict(other)})

    report = ProbeReport(
        model=label, mode=mode, discrepancies=discrepancies, distances=distances, pairs=pairs
    )
    logger.info(
        f"Probe {label}: min discrepancy {report.min_discrepancy:.3g}, "
        f"separated minimum {report.min_separated_discrepancy}"
    )
    return report


def _as_dict(theta) -> Dict:
    if isinstance(theta, RectParams):
        return {"mu": theta.mu, "alpha": theta.alpha, "phi": theta.phi, "lambda0": theta.lambda0}
    return theta.to_dict()


def equivalence_witnesses(
    theta: NoisyHawkesParams, n: int = 5, seed: Optional[int] = None
) -> List[Dict]:
    """
    Parameter tuples sharing the spectrum of ``theta``, with the tau used.

    Picks the univariate, diagonal or zero-row map from the shape of theta.
    """
    rng = check_random_state(seed)
    if theta.d == 1:
        tau_range, mapper = uni_tau_range(theta), uni_equivalent
    elif theta.d == 2 and theta.alpha[0, 1] == 0 and theta.alpha[1, 0] == 0:
        tau_range, mapper = biv_tau_range_diag(theta), biv_equivalent_diag
    elif theta.d == 2:
        tau_range, mapper = biv_tau_range_row(theta), biv_equivalent_row
    else:
        raise ValueError(f"no equivalence map for d={theta.d}")
    out = []
    for _ in range(n):
        tau = tau_range.sample(rng)
        out.append({"tau": tau, "theta_prime": mapper(theta, tau).to_dict()})
    return out
