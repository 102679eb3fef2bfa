"""Tests for spectral densities and periodograms."""

import numpy as np
import pytest

from noisyhawkes import (
    NoisyHawkesParams,
    Periodogram,
    RectParams,
    average_periodogram,
    periodogram,
    rect_kernel_ft,
    rect_shape_function,
    rect_taylor,
    spectral_density_biv,
    spectral_density_general,
    spectral_density_rect,
    spectral_density_uni,
    taylor_coefficients,
)
from noisyhawkes.exceptions import SpectralEvaluationError
from noisyhawkes.spectral import (
    exp_kernel_ft,
    exponential_kernel,
    exponential_moments,
    spectral_density_biv_column_zero,
    spectral_matrix,
    uniform_moments,
)

from .test_utils import bivariate_params, make_events, random_params

NU = np.concatenate([[0.0], np.geomspace(1e-3, 50.0, 40)])


def test_exponential_kernel_transform():
    assert complex(exp_kernel_ft(0.5, 1.0, 0.0)) == pytest.approx(0.5 + 0j)
    assert complex(exp_kernel_ft(1.0, 2.0, 1.0 / np.pi)) == pytest.approx(0.2 - 0.4j)
    assert abs(exp_kernel_ft(0.5, 1.0, 1e8)) < 1e-8

    with pytest.raises(ValueError) as excinfo:
        exp_kernel_ft(0.5, 0.0, 1.0)
    assert "beta" in str(excinfo.value)


def test_univariate_density_limits(uni_theta):
    """Constant term m + lambda0 at high frequency, m / (1 - alpha)^2 + lambda0 at zero."""
    assert spectral_density_uni(uni_theta, 0.0) == pytest.approx(8.6, rel=1e-12)
    assert spectral_density_uni(uni_theta, 1e6) == pytest.approx(2.6, rel=1e-9)

    poisson = NoisyHawkesParams.univariate(1.0, 0.0, 1.0, 0.6)
    assert np.allclose(spectral_density_uni(poisson, NU), 1.6, rtol=1e-14)

    values = spectral_density_uni(uni_theta, NU)
    assert values.shape == NU.shape
    assert np.all(np.diff(values) < 0)


def test_univariate_density_rejects_bad_alpha():
    with pytest.raises(ValueError) as excinfo:
        spectral_density_uni(NoisyHawkesParams.univariate(1.0, 1.0, 1.0), 0.1)
    assert "alpha" in str(excinfo.value)


def test_bivariate_closed_form_matches_general(biv_theta):
    """Closed-form 2x2 matrix agrees with the matrix-inverse formula."""
    for theta in (biv_theta, random_params(2, seed=0), random_params(2, seed=1)):
        closed = spectral_density_biv(theta, NU).values
        general = spectral_density_general(
            theta.mu, exponential_kernel(theta.alpha, theta.beta), theta.lambda0, NU
        ).values
        assert np.allclose(closed, general, rtol=1e-10, atol=1e-12)


def test_column_zero_density_matches_closed_form():
    theta = bivariate_params(scenario=1)
    special = spectral_density_biv_column_zero(theta, NU).values
    closed = spectral_density_biv(theta, NU).values
    assert np.allclose(special, closed, rtol=1e-10, atol=1e-12)

    with pytest.raises(ValueError):
        spectral_density_biv_column_zero(bivariate_params(scenario=2), NU)


def test_bivariate_density_without_interactions():
    theta = NoisyHawkesParams(mu=[1.0, 2.0], alpha=np.zeros((2, 2)), beta=[1.0, 1.0], lambda0=0.5)
    f = spectral_density_biv(theta, NU).values
    expected = np.broadcast_to(np.diag([1.5, 2.5]), f.shape)
    assert np.allclose(f, expected, rtol=1e-14)


def test_spectral_matrix_shapes_and_hermitian():
    theta = random_params(3, seed=2)
    f = spectral_density_general(
        theta.mu, exponential_kernel(theta.alpha, theta.beta), theta.lambda0, NU
    )
    assert f.values.shape == (NU.size, 3, 3)
    assert f.is_hermitian()
    assert np.all(np.linalg.eigvalsh(f.values) > 0)

    single = spectral_density_biv(bivariate_params(), 0.3)
    assert single.values.shape == (2, 2)
    assert spectral_matrix(NoisyHawkesParams.univariate(1.0, 0.5, 1.0), NU).shape == (NU.size, 1, 1)


def test_general_density_rejects_explosive_kernel():
    theta = NoisyHawkesParams(mu=[1.0, 1.0], alpha=[[0.6, 0.5], [0.5, 0.6]], beta=[1.0, 1.0])
    with pytest.raises(ValueError) as excinfo:
        spectral_density_general(
            theta.mu, exponential_kernel(theta.alpha, theta.beta), 0.0, NU
        )
    assert "spectral radius" in str(excinfo.value)


def test_rect_density_limits():
    theta = RectParams(mu=1.0, alpha=0.5, phi=1.0, lambda0=0.3)
    assert complex(rect_kernel_ft(1.0, 0.0)) == pytest.approx(1.0 + 0j)
    assert spectral_density_rect(theta, 0.0) == pytest.approx(8.3, rel=1e-12)
    assert spectral_density_rect(theta, 1e6 + 0.5) == pytest.approx(2.3, rel=1e-5)


def test_rect_kernel_series_branch_is_continuous():
    """The small-frequency series joins the closed form without a jump."""
    phi = 2.0
    cutoff = 1e-4 / (2 * np.pi * phi)
    below = rect_kernel_ft(phi, np.array([cutoff * 0.999]))
    above = rect_kernel_ft(phi, np.array([cutoff * 1.001]))
    assert np.allclose(below, above, atol=1e-6)


def test_rect_taylor_coefficients():
    """Closed-form expansion coefficients match the general series and the density."""
    assert rect_taylor(RectParams(1.0, 0.5, 1.0, 0.0)).a == pytest.approx(8.0)

    theta = RectParams(mu=1.3, alpha=0.4, phi=1.5, lambda0=0.2)
    taylor = rect_taylor(theta)
    series = taylor_coefficients(theta.mu, theta.alpha, theta.lambda0, uniform_moments(theta.phi, 4), 2)
    assert np.allclose(series, [taylor.a, taylor.c1, taylor.c2], rtol=1e-10)

    assert spectral_density_rect(theta, 0.0) == pytest.approx(taylor.a, rel=1e-12)
    nu = 1e-3
    slope = (spectral_density_rect(theta, nu) - taylor.a) / nu**2
    assert slope == pytest.approx(taylor.c1, rel=1e-3)


def test_taylor_coefficients_exponential_kernel(uni_theta):
    """For the exponential kernel the expansion follows from the closed form."""
    mu, alpha, beta, lambda0 = 1.0, 0.5, 1.0, 0.6
    coeffs = taylor_coefficients(mu, alpha, lambda0, exponential_moments(beta, 2), 1)
    m = mu / (1 - alpha)
    kappa = m * beta**2 * alpha * (2 - alpha)
    pole = beta**2 * (1 - alpha) ** 2
    assert coeffs[0] == pytest.approx(spectral_density_uni(uni_theta, 0.0), rel=1e-12)
    assert coeffs[1] == pytest.approx(-kappa * 4 * np.pi**2 / pole**2, rel=1e-12)

    with pytest.raises(ValueError) as excinfo:
        taylor_coefficients(mu, alpha, lambda0, exponential_moments(beta, 2), 2)
    assert "moments" in str(excinfo.value)


def test_rect_shape_function_is_increasing():
    a = np.linspace(0.01, 0.99, 200)
    values = rect_shape_function(a)
    assert np.all(np.diff(values) > 0)
    assert rect_shape_function(0.0) == pytest.approx(0.5)


def test_rect_params_validation():
    with pytest.raises(ValueError) as excinfo:
        RectParams(mu=1.0, alpha=1.0, phi=1.0)
    assert "alpha" in str(excinfo.value)
    with pytest.raises(ValueError) as excinfo:
        RectParams(mu=1.0, alpha=0.5, phi=0.0)
    assert "phi" in str(excinfo.value)


def test_periodogram_single_event():
    """One event gives a flat periodogram 1 / T."""
    events = make_events([[3.7]], 10.0)
    pg = periodogram(events, 25, method="direct")
    assert pg.M == 25
    assert np.allclose(pg.freqs, np.arange(1, 26) / 10.0)
    assert np.allclose(pg.values[:, 0, 0], 0.1, rtol=1e-12)


def test_periodogram_empty_series():
    events = make_events([[], []], 10.0)
    pg = periodogram(events, 8, method="direct")
    assert pg.values.shape == (8, 2, 2)
    assert np.all(pg.values == 0)


def test_periodogram_is_hermitian_rank_one(biv_events):
    pg = periodogram(biv_events, 200, method="direct")
    assert np.allclose(pg.values, np.conj(np.swapaxes(pg.values, -1, -2)))
    det = np.real(np.linalg.det(pg.values))
    assert np.allclose(det, 0.0, atol=1e-8 * np.max(np.abs(pg.values)) ** 2)
    assert np.all(pg.diagonal() >= 0)


def test_periodogram_window_offset():
    """Times are taken relative to the window start."""
    events = make_events([[1.0, 2.5, 7.0]], 10.0)
    shifted = events.shifted(100.0)
    a = periodogram(events, 30, method="direct")
    b = periodogram(shifted, 30, method="direct")
    assert np.allclose(a.values, b.values, rtol=1e-10)


def test_nufft_matches_direct(uni_events):
    """The nonuniform FFT agrees with direct sums relative to the largest entry."""
    pytest.importorskip("finufft")
    M = 2000
    direct = periodogram(uni_events, M, method="direct")
    fast = periodogram(uni_events, M, method="nufft")
    scale = np.max(np.abs(direct.values))
    assert np.max(np.abs(direct.values - fast.values)) / scale < 1e-6


def test_periodogram_method_validation(uni_events):
    with pytest.raises(ValueError) as excinfo:
        periodogram(uni_events, 10, method="fft")
    assert "method" in str(excinfo.value)
    with pytest.raises(ValueError):
        periodogram(uni_events, 0, method="direct")


def test_periodogram_frame_and_average(biv_events):
    pg = periodogram(biv_events, 50, method="direct")
    df = pg.to_frame()
    assert {"k", "nu", "re_01", "im_10"} <= set(df.columns)
    back = Periodogram.from_frame(df, pg.horizon)
    assert np.allclose(back.values, pg.values)

    avg = average_periodogram([pg, pg])
    assert np.allclose(avg.values, pg.values)

    other = periodogram(biv_events, 40, method="direct")
    with pytest.raises(ValueError):
        average_periodogram([pg, other])
    with pytest.raises(ValueError):
        average_periodogram([])


def test_singular_matrix_raises_evaluation_error():
    def singular_kernel(nu):
        nu = np.atleast_1d(nu)
        out = np.zeros((nu.size, 1, 1), dtype=complex)
        out[nu != 0] = 1.0
        return out

    with pytest.raises(SpectralEvaluationError):
        spectral_density_general([1.0], singular_kernel, 0.0, [0.5])
