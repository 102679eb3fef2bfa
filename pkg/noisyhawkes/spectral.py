"""
Spectral densities of noisy Hawkes processes and periodograms of event data.

Frequencies are in cycles per time unit. Matrix-valued quantities evaluated
on an array of frequencies have shape ``(n_freqs, d, d)``.
"""

from dataclasses import dataclass
from typing import Callable, List, Sequence, Union

import numpy as np
import pandas as pd

from .events import EventSeries
from .exceptions import SpectralEvaluationError
from .logger import logger
from .params import NoisyHawkesParams, hawkes_mean_intensity
from .utils import spectral_radius

TWO_PI = 2.0 * np.pi
NUFFT_EPS = 1e-9
_RECT_SERIES_CUTOFF = 1e-4
# largest (n_events x n_freqs) block evaluated at once by the direct periodogram
_DIRECT_BLOCK = 2**22

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class SpectralMatrix:
    """
    Spectral density matrix at one frequency or a batch of frequencies.

    Attributes:
        nu: Frequency (scalar) or array of frequencies.
        values: Complex array of shape (d, d) or (len(nu), d, d).
    """

    nu: Union[float, np.ndarray]
    values: np.ndarray

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.values, axis1=-2, axis2=-1))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        conj_t = np.conj(np.swapaxes(self.values, -1, -2))
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return bool(np.allclose(self.values, conj_t, rtol=0.0, atol=atol * scale))


@dataclass(frozen=True)
class RectTaylor:
    """Coefficients of f(nu) = a + c1 nu^2 + c2 nu^4 + O(nu^6) for the rectangle kernel."""

    a: float
    c1: float
    c2: float


@dataclass(frozen=True)
class RectParams:
    """Univariate noisy Hawkes process with kernel alpha / phi on [0, phi]."""

    mu: float
    alpha: float
    phi: float
    lambda0: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        if not self.lambda0 >= 0:
            raise ValueError(f"lambda0 must be non-negative, got {self.lambda0}")


# ---------------------------------------------------------------------------
# Kernel transforms
# ---------------------------------------------------------------------------


def exp_kernel_ft(alpha_ij, beta_i, nu):
    """Fourier transform alpha * beta / (beta + 2 pi i nu) of an exponential kernel."""
    beta_i = np.asarray(beta_i, dtype=float)
    if np.any(beta_i <= 0):
        raise ValueError(f"beta must be positive, got {beta_i}")
    nu = np.asarray(nu, dtype=float)
    return np.asarray(alpha_ij, dtype=float) * beta_i / (beta_i + 1j * TWO_PI * nu)


def kernel_ft_matrix(alpha, beta, nu) -> np.ndarray:
    """Matrix h(nu) with entries alpha[i, j] beta[i] / (beta[i] + 2 pi i nu)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    denom = beta[None, :] + 1j * TWO_PI * nu.reshape(-1)[:, None]  # (n, d)
    out = alpha[None, :, :] * (beta[None, :] / denom)[:, :, None]
    return out.reshape(nu.shape + alpha.shape)


def exponential_kernel(alpha, beta) -> Callable[[np.ndarray], np.ndarray]:
    """Callback nu -> h(nu) for exponential kernels, for ``spectral_density_general``."""
    alpha = np.array(alpha, dtype=float)
    beta = np.array(beta, dtype=float)

    def kernel_ft(nu):
        return kernel_ft_matrix(alpha, beta, nu)

    return kernel_ft


def rect_kernel_ft(phi: float, nu):
    """
    Fourier transform of the normalized rectangle kernel 1/phi on [0, phi].

    Uses a Taylor series when |2 pi nu phi| < 1e-4.
    """
    if not phi > 0:
        raise ValueError(f"phi must be positive, got {phi}")
    nu = np.asarray(nu, dtype=float)
    omega = TWO_PI * nu * phi
    out = np.exp(-1j * np.pi * nu * phi) * np.sinc(nu * phi)
    small = np.abs(omega) < _RECT_SERIES_CUTOFF
    if np.any(small):
        w = omega[small] if omega.ndim else omega
        series = 1.0 - 1j * w / 2.0 - w**2 / 6.0 + 1j * w**3 / 24.0
        if omega.ndim:
            out[small] = series
        else:
            out = series
    return out


# ---------------------------------------------------------------------------
# Exponential-kernel densities
# ---------------------------------------------------------------------------


def _check_univariate(theta: NoisyHawkesParams):
    if theta.d != 1:
        raise ValueError(f"expected a univariate parameter tuple, got d={theta.d}")
    mu, alpha, beta = theta.mu[0], theta.alpha[0, 0], theta.beta[0]
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    return mu, alpha, beta, theta.lambda0


def spectral_density_uni(theta: NoisyHawkesParams, nu: ArrayLike):
    """
    Closed-form spectral density of a univariate noisy exponential Hawkes process.

    f(nu) = m beta^2 alpha (2 - alpha) / (beta^2 (1 - alpha)^2 + 4 pi^2 nu^2) + m + lambda0
    with m = mu / (1 - alpha).

    Parameters:
        theta (NoisyHawkesParams): Univariate parameters, 0 <= alpha < 1.
        nu (float or array): Frequencies.

    Returns:
        float or ndarray: Real density values.
    """
    mu, alpha, beta, lambda0 = _check_univariate(theta)
    nu = np.asarray(nu, dtype=float)
    m = mu / (1.0 - alpha)
    kappa = m * beta**2 * alpha * (2.0 - alpha)
    value = kappa / (beta**2 * (1.0 - alpha) ** 2 + (TWO_PI * nu) ** 2) + m + lambda0
    return float(value) if value.ndim == 0 else value


def _check_bivariate(theta: NoisyHawkesParams):
    if theta.d != 2:
        raise ValueError(f"expected a bivariate parameter tuple, got d={theta.d}")
    rho = spectral_radius(theta.alpha)
    if rho >= 1:
        raise ValueError(f"spectral radius of alpha must be < 1, got {rho:.6g}")


def _pack(nu: np.ndarray, values: np.ndarray) -> SpectralMatrix:
    if nu.ndim == 0:
        return SpectralMatrix(nu=float(nu), values=values[0])
    return SpectralMatrix(nu=nu, values=values)


def spectral_density_biv(theta: NoisyHawkesParams, nu: ArrayLike) -> SpectralMatrix:
    """
    Closed-form 2x2 spectral matrix of a bivariate noisy exponential Hawkes process.

    With D = (1 - h11)(1 - h22) - h12 h21 evaluated at nu:
        f11 = (m1 |1 - h22|^2 + m2 |h12|^2) / |D|^2 + lambda0
        f22 = (m2 |1 - h11|^2 + m1 |h21|^2) / |D|^2 + lambda0
        f12 = (m1 (1 - h22(nu)) h21(-nu) + m2 (1 - h11(-nu)) h12(nu)) / |D|^2
    """
    _check_bivariate(theta)
    nu = np.asarray(nu, dtype=float)
    flat = nu.reshape(-1)
    m1, m2 = hawkes_mean_intensity(theta)
    h = kernel_ft_matrix(theta.alpha, theta.beta, flat)
    h11, h12, h21, h22 = h[:, 0, 0], h[:, 0, 1], h[:, 1, 0], h[:, 1, 1]
    det = (1.0 - h11) * (1.0 - h22) - h12 * h21
    det2 = np.abs(det) ** 2
    if np.any(det2 == 0):
        raise SpectralEvaluationError("I - h(nu) is singular")

    values = np.empty((flat.size, 2, 2), dtype=complex)
    values[:, 0, 0] = (m1 * np.abs(1.0 - h22) ** 2 + m2 * np.abs(h12) ** 2) / det2 + theta.lambda0
    values[:, 1, 1] = (m2 * np.abs(1.0 - h11) ** 2 + m1 * np.abs(h21) ** 2) / det2 + theta.lambda0
    values[:, 0, 1] = (m1 * (1.0 - h22) * np.conj(h21) + m2 * np.conj(1.0 - h11) * h12) / det2
    values[:, 1, 0] = np.conj(values[:, 0, 1])
    return _pack(nu, values)


def spectral_density_biv_column_zero(theta: NoisyHawkesParams, nu: ArrayLike) -> SpectralMatrix:
    """
    Specialized bivariate spectral matrix when alpha12 = alpha22 = 0.

        f11 = m1 / |1 - h11(nu)|^2 + lambda0
        f12 = (f11 - lambda0) h21(-nu)
        f22 = |f12|^2 / (f11 - lambda0) + m2 + lambda0
    with m1 = mu1 / (1 - alpha11) and m2 = mu2 + mu1 alpha21 / (1 - alpha11).
    """
    _check_bivariate(theta)
    alpha = theta.alpha
    if alpha[0, 1] != 0 or alpha[1, 1] != 0:
        raise ValueError("expected alpha12 = alpha22 = 0")
    nu = np.asarray(nu, dtype=float)
    flat = nu.reshape(-1)
    mu1, mu2 = theta.mu
    beta1, beta2 = theta.beta
    m1 = mu1 / (1.0 - alpha[0, 0])
    m2 = mu2 + mu1 * alpha[1, 0] / (1.0 - alpha[0, 0])
    h11 = exp_kernel_ft(alpha[0, 0], beta1, flat)
    h21 = exp_kernel_ft(alpha[1, 0], beta2, flat)

    hawkes11 = m1 / np.abs(1.0 - h11) ** 2
    f12 = hawkes11 * np.conj(h21)
    values = np.empty((flat.size, 2, 2), dtype=complex)
    values[:, 0, 0] = hawkes11 + theta.lambda0
    values[:, 0, 1] = f12
    values[:, 1, 0] = np.conj(f12)
    values[:, 1, 1] = np.abs(f12) ** 2 / hawkes11 + m2 + theta.lambda0
    return _pack(nu, values)


def spectral_density_general(
    mu,
    kernel_ft: Callable[[np.ndarray], np.ndarray],
    lambda0: float,
    nu: ArrayLike,
) -> SpectralMatrix:
    """
    Spectral matrix of a noisy Hawkes process from its kernel Fourier transform.

    f(nu) = (I - h(nu))^{-1} diag(m) (I - h(-nu)^T)^{-1} + lambda0 I,
    where m = (I - h(0))^{-1} mu.

    Parameters:
        mu (array): Baselines, shape (d,).
        kernel_ft (callable): Maps an array of n frequencies to an (n, d, d) array.
        lambda0 (float): Noise intensity.
        nu (float or array): Frequencies.

    Returns:
        SpectralMatrix: Values at nu.

    Raises:
        SpectralEvaluationError: If I - h(nu) is singular at some frequency.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    d = mu.shape[0]
    nu = np.asarray(nu, dtype=float)
    flat = nu.reshape(-1)

    h0 = np.asarray(kernel_ft(np.zeros(1))).reshape(d, d)
    rho = spectral_radius(np.abs(h0))
    if rho >= 1:
        raise ValueError(f"spectral radius of |h(0)| must be < 1, got {rho:.6g}")
    m = np.linalg.solve(np.eye(d) - np.real(h0), mu)

    eye = np.eye(d)
    h_pos = np.asarray(kernel_ft(flat)).reshape(flat.size, d, d)
    h_neg = np.asarray(kernel_ft(-flat)).reshape(flat.size, d, d)
    try:
        left = np.linalg.inv(eye - h_pos)
        right = np.linalg.inv(eye - np.swapaxes(h_neg, -1, -2))
    except np.linalg.LinAlgError as exc:
        raise SpectralEvaluationError(f"I - h(nu) is singular: {exc}") from exc

    values = (left * m[None, None, :]) @ right + lambda0 * eye
    return _pack(nu, values)


def spectral_matrix(theta: NoisyHawkesParams, nu: ArrayLike) -> np.ndarray:
    """
    Spectral density of an exponential-kernel noisy Hawkes process as an
    ``(n, d, d)`` complex array, using the closed form when d <= 2.
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if theta.d == 1:
        values = spectral_density_uni(theta, nu)
        return np.asarray(values, dtype=complex).reshape(-1, 1, 1)
    if theta.d == 2:
        return spectral_density_biv(theta, nu).values
    return spectral_density_general(
        theta.mu, exponential_kernel(theta.alpha, theta.beta), theta.lambda0, nu
    ).values


# ---------------------------------------------------------------------------
# Rectangle kernel
# ---------------------------------------------------------------------------


def spectral_density_rect(theta: RectParams, nu: ArrayLike):
    """Density mu / ((1 - alpha) |1 - alpha h(nu)|^2) + lambda0 for the rectangle kernel."""
    if not isinstance(theta, RectParams):
        theta = RectParams(*theta)
    h = rect_kernel_ft(theta.phi, nu)
    value = theta.mu / ((1.0 - theta.alpha) * np.abs(1.0 - theta.alpha * h) ** 2) + theta.lambda0
    return float(value) if np.ndim(value) == 0 else value


def uniform_moments(phi: float, n: int) -> np.ndarray:
    """Moments m_0..m_n of the uniform distribution on [0, phi]."""
    k = np.arange(n + 1)
    return phi**k / (k + 1.0)


def exponential_moments(beta: float, n: int) -> np.ndarray:
    """Moments m_0..m_n of the exponential distribution with rate beta."""
    k = np.arange(n + 1)
    return np.cumprod(np.concatenate([[1.0], k[1:] / beta]))


def taylor_coefficients(mu: float, alpha: float, lambda0: float, moments, order: int) -> np.ndarray:
    """
    Taylor coefficients of a univariate noisy Hawkes density around nu = 0.

    The kernel is alpha * g for a probability density g with moments
    ``moments[n] = E[X^n]`` (``moments[0]`` must be 1). Returns c with
    f(nu) = sum_n c[n] nu^(2n) + O(nu^(2 order + 2)).

    Parameters:
        mu (float): Baseline.
        alpha (float): Kernel L1 norm, in (0, 1).
        lambda0 (float): Noise intensity.
        moments (array): At least 2 * order + 1 moments starting with m_0.
        order (int): Highest power of nu^2 returned.
    """
    moments = np.asarray(moments, dtype=float)
    n_terms = 2 * order + 1
    if moments.size < n_terms:
        raise ValueError(f"need {n_terms} moments for order {order}, got {moments.size}")
    if not np.isclose(moments[0], 1.0):
        raise ValueError(f"moments[0] must be 1, got {moments[0]}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")

    # 1 - alpha h(nu) as a series in tau = 2 pi nu, h(nu) = sum_n (-i tau)^n m_n / n!
    n = np.arange(n_terms)
    factorial = np.cumprod(np.concatenate([[1.0], n[1:].astype(float)]))
    p = -alpha * (-1j) ** n * moments[:n_terms] / factorial
    p[0] += 1.0
    # |1 - alpha h|^2 truncated, then its reciprocal by series division
    s = np.real(np.convolve(p, np.conj(p))[:n_terms])
    g = np.zeros(n_terms)
    g[0] = 1.0 / s[0]
    for k in range(1, n_terms):
        g[k] = -np.dot(s[1 : k + 1], g[k - 1 :: -1]) / s[0]

    even = g[0::2] * (TWO_PI ** (2 * np.arange(order + 1)))
    coeffs = mu / (1.0 - alpha) * even
    coeffs[0] += lambda0
    return coeffs


def rect_taylor(theta: RectParams) -> RectTaylor:
    """
    Coefficients a, c1, c2 of the rectangle-kernel density expansion at 0.

    With m_n = phi^n / (n + 1) and r = alpha / (1 - alpha):
        a  = mu / (1 - alpha)^3 + lambda0
        c1 = 4 mu alpha pi^2 / (1 - alpha)^4 * (-m2 - r m1^2)
        c2 = 16 mu alpha pi^4 / (1 - alpha)^4
             * (m4 / 12 + r (m1 m3 / 3 + 3 m2^2 / 4) + 2 r^2 m2 m1^2 + r^3 m1^4)
    """
    if not isinstance(theta, RectParams):
        theta = RectParams(*theta)
    mu, alpha, phi = theta.mu, theta.alpha, theta.phi
    _, m1, m2, m3, m4 = uniform_moments(phi, 4)
    r = alpha / (1.0 - alpha)
    scale = mu * alpha / (1.0 - alpha) ** 4
    a = mu / (1.0 - alpha) ** 3 + theta.lambda0
    c1 = 4.0 * np.pi**2 * scale * (-m2 - r * m1**2)
    c2 = (
        16.0
        * np.pi**4
        * scale
        * (m4 / 12.0 + r * (m1 * m3 / 3.0 + 0.75 * m2**2) + 2.0 * r**2 * m2 * m1**2 + r**3 * m1**4)
    )
    return RectTaylor(a=float(a), c1=float(c1), c2=float(c2))


def rect_shape_function(alpha):
    """Shape function (2 - a)(a^3 - 8a^2 + 18a + 4) / (4 - a)^2, increasing on (0, 1)."""
    a = np.asarray(alpha, dtype=float)
    return (2.0 - a) * (a**3 - 8.0 * a**2 + 18.0 * a + 4.0) / (4.0 - a) ** 2


# ---------------------------------------------------------------------------
# Periodogram
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Periodogram:
    """
    Cross-periodogram matrices on the grid nu_k = k / T, k = 1..M.

    Attributes:
        freqs: Array of the M frequencies.
        values: Complex array of shape (M, d, d).
        horizon: Window length T.
    """

    freqs: np.ndarray
    values: np.ndarray
    horizon: float

    @property
    def M(self) -> int:
        return self.freqs.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.values, axis1=-2, axis2=-1))

    def to_frame(self) -> pd.DataFrame:
        """Wide table with k, nu and the real/imaginary part of every entry."""
        data = {"k": np.arange(1, self.M + 1), "nu": self.freqs}
        for i in range(self.d):
            for j in range(self.d):
                data[f"re_{i}{j}"] = np.real(self.values[:, i, j])
                data[f"im_{i}{j}"] = np.imag(self.values[:, i, j])
        return pd.DataFrame(data)

    @classmethod
    def from_frame(cls, df: pd.DataFrame, horizon: float) -> "Periodogram":
        d = int(round(np.sqrt(sum(col.startswith("re_") for col in df.columns))))
        values = np.empty((len(df), d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                values[:, i, j] = df[f"re_{i}{j}"].to_numpy() + 1j * df[f"im_{i}{j}"].to_numpy()
        return cls(freqs=df["nu"].to_numpy(dtype=float), values=values, horizon=float(horizon))


def _fourier_sums_direct(times: np.ndarray, horizon: float, M: int) -> np.ndarray:
    k = np.arange(1, M + 1, dtype=float)
    z = np.zeros(M, dtype=complex)
    if times.size == 0:
        return z
    scaled = times / horizon
    step = max(1, _DIRECT_BLOCK // max(times.size, 1))
    for start in range(0, M, step):
        block = k[start : start + step]
        phase = np.outer(scaled, block)
        phase -= np.floor(phase)
        z[start : start + step] = np.exp(-1j * TWO_PI * phase).sum(axis=0)
    return z


def _fourier_sums_nufft(times: np.ndarray, horizon: float, M: int, eps: float) -> np.ndarray:
    import finufft

    if times.size == 0:
        return np.zeros(M, dtype=complex)
    x = np.ascontiguousarray(TWO_PI * times / horizon, dtype=np.float64)
    c = np.ones(x.size, dtype=np.complex128)
    # modes -M..M in increasing order, keep k = 1..M
    modes = finufft.nufft1d1(x, c, 2 * M + 1, eps=eps, isign=-1)
    return np.asarray(modes[M + 1 :], dtype=complex)


def _resolve_method(method: str) -> str:
    if method not in ("auto", "direct", "nufft"):
        raise ValueError(f"method must be 'auto', 'direct' or 'nufft', got {method}")
    if method == "direct":
        return method
    try:
        import finufft  # noqa: F401
    except ImportError:
        if method == "nufft":
            logger.error("finufft is required for the accelerated periodogram")
            raise ImportError(
                "finufft is required for method='nufft'. Install it with: pip install finufft"
            )
        logger.warning("finufft not available, falling back to the direct periodogram")
        return "direct"
    return "nufft"


def fourier_sums(
    events: EventSeries, M: int, method: str = "auto", eps: float = NUFFT_EPS
) -> np.ndarray:
    """
    Fourier sums z_i(nu_k) = sum_t exp(-2 pi i nu_k t) for k = 1..M.

    Times are taken relative to the start of the window.

    Returns:
        ndarray: Complex array of shape (M, d).
    """
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    method = _resolve_method(method)
    horizon = events.horizon
    z = np.empty((M, events.d), dtype=complex)
    for i, comp in enumerate(events.times):
        rebased = comp - events.window[0]
        if method == "nufft":
            z[:, i] = _fourier_sums_nufft(rebased, horizon, M, eps)
        else:
            z[:, i] = _fourier_sums_direct(rebased, horizon, M)
    return z


def periodogram(events: EventSeries, M: int, method: str = "auto") -> Periodogram:
    """
    Cross-periodogram I_ij(nu_k) = z_i(nu_k) conj(z_j(nu_k)) / T at nu_k = k / T.

    Parameters:
        events (EventSeries): Observed events.
        M (int): Number of frequencies.
        method (str): "direct" (exact sums), "nufft" (type-1 nonuniform FFT
            via finufft, tolerance 1e-9) or "auto" (nufft when available).

    Returns:
        Periodogram: Hermitian positive semidefinite matrices, one per frequency.
    """
    horizon = events.horizon
    logger.debug(f"Periodogram of {events.n_events} events, M={M}, method={method}")
    z = fourier_sums(events, M, method=method)
    values = z[:, :, None] * np.conj(z[:, None, :]) / horizon
    freqs = np.arange(1, M + 1, dtype=float) / horizon
    return Periodogram(freqs=freqs, values=values, horizon=horizon)


def average_periodogram(periodograms: List[Periodogram]) -> Periodogram:
    """Average of periodograms computed on equal windows and grids."""
    if not periodograms:
        raise ValueError("need at least one periodogram to average")
    first = periodograms[0]
    for pg in periodograms[1:]:
        if pg.horizon != first.horizon or pg.M != first.M or pg.d != first.d:
            raise ValueError("periodograms must share horizon, frequency count and dimension")
    values = np.mean([pg.values for pg in periodograms], axis=0)
    return Periodogram(freqs=first.freqs.copy(), values=values, horizon=first.horizon)
