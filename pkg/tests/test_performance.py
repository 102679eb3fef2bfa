"""Accuracy and runtime checks at the scale of the reference studies.

The Monte Carlo checks are marked slow and run with ``pytest --runslow``.
"""

import time

import numpy as np
import pytest

from noisyhawkes import (
    ExperimentConfig,
    NoisyHawkesParams,
    RectParams,
    SimulationConfig,
    TauRange,
    biv_equivalent_diag,
    biv_equivalent_row,
    biv_tau_range_diag,
    biv_tau_range_row,
    injectivity_probe,
    periodogram,
    rect_taylor,
    run_experiment,
    simulate_noisy_hawkes,
    spectral_density_biv,
    spectral_density_general,
    spectral_density_rect,
    spectral_density_uni,
    three_step_fit,
    uni_equivalent,
    uni_tau_range,
)
from noisyhawkes.spectral import exponential_kernel
from noisyhawkes.support import SupportConfig
from noisyhawkes.whittle import FitConfig, fit, relative_error, univariate_model

from .test_utils import bivariate_params, random_params


def _relative(f, g):
    return np.max(np.abs(f - g)) / np.max(np.abs(f))


def _random_univariate(rng):
    return NoisyHawkesParams.univariate(
        rng.uniform(0.5, 2.0), rng.uniform(0.1, 0.9), rng.uniform(0.5, 3.0), rng.uniform(0.1, 2.0)
    )


def test_closed_forms_match_matrix_formula():
    """Closed-form densities agree with the matrix formula at 1000 (theta, nu) pairs."""
    start = time.time()
    rng = np.random.default_rng(0)
    for k in range(50):
        nu = rng.uniform(0.0, 10.0, size=10)
        uni = random_params(1, seed=k)
        general = spectral_density_general(
            uni.mu, exponential_kernel(uni.alpha, uni.beta), uni.lambda0, nu
        ).values[:, 0, 0]
        assert np.allclose(spectral_density_uni(uni, nu), np.real(general), rtol=1e-10, atol=0.0)

        biv = random_params(2, seed=1000 + k)
        general = spectral_density_general(
            biv.mu, exponential_kernel(biv.alpha, biv.beta), biv.lambda0, nu
        ).values
        assert np.allclose(spectral_density_biv(biv, nu).values, general, rtol=1e-10, atol=1e-13)
    assert time.time() - start < 5.0


def test_univariate_witnesses_at_scale():
    """100 parameter tuples with 10 equivalent tuples each share the same spectrum."""
    rng = np.random.default_rng(1)
    nu = np.linspace(0.0, 20.0, 200)
    for _ in range(100):
        theta = _random_univariate(rng)
        f = spectral_density_uni(theta, nu)
        tau_range = uni_tau_range(theta)
        for _ in range(10):
            tau = tau_range.sample(rng)
            other = uni_equivalent(theta, tau)
            assert _relative(f, spectral_density_uni(other, nu)) <= 1e-10

            back = uni_equivalent(other, -tau)
            assert back.allclose(theta, rtol=1e-9, atol=1e-12)


def test_bivariate_witnesses_at_scale():
    rng = np.random.default_rng(2)
    nu = np.linspace(0.0, 20.0, 200)
    for _ in range(50):
        a11, a22 = rng.uniform(0.1, 0.8, size=2)
        diag = NoisyHawkesParams(
            mu=rng.uniform(0.5, 2.0, 2),
            alpha=[[a11, 0.0], [0.0, a22]],
            beta=rng.uniform(0.5, 3.0, 2),
            lambda0=rng.uniform(0.1, 2.0),
        )
        row = NoisyHawkesParams(
            mu=rng.uniform(0.5, 2.0, 2),
            alpha=[rng.uniform(0.1, 0.6, 2), [0.0, 0.0]],
            beta=[rng.uniform(0.5, 3.0), 1.0],
            lambda0=rng.uniform(0.1, 2.0),
        )
        for theta, tau_range, mapping in (
            (diag, biv_tau_range_diag(diag), biv_equivalent_diag),
            (row, biv_tau_range_row(row), biv_equivalent_row),
        ):
            f = spectral_density_biv(theta, nu).values
            for _ in range(5):
                other = mapping(theta, tau_range.sample(rng))
                assert _relative(f, spectral_density_biv(other, nu).values) <= 1e-9


def test_rect_taylor_matches_finite_differences():
    """Richardson-extrapolated differences at 0 recover both expansion coefficients."""
    rng = np.random.default_rng(3)
    for _ in range(50):
        theta = RectParams(
            mu=rng.uniform(0.5, 2.0),
            alpha=rng.uniform(0.1, 0.7),
            phi=rng.uniform(0.5, 2.0),
            lambda0=rng.uniform(0.0, 1.0),
        )
        taylor = rect_taylor(theta)

        def second(h):
            return (spectral_density_rect(theta, h) - taylor.a) / h**2

        def fourth(h):
            return (spectral_density_rect(theta, h) - taylor.a - taylor.c1 * h**2) / h**4

        h1 = 1e-3 / theta.phi
        c1 = (4 * second(h1 / 2) - second(h1)) / 3
        h2 = 1e-2 / theta.phi
        c2 = (4 * fourth(h2 / 2) - fourth(h2)) / 3
        assert c1 == pytest.approx(taylor.c1, rel=1e-4)
        assert c2 == pytest.approx(taylor.c2, rel=1e-3)


def test_time_rescaling_equivariance(uni_theta):
    """Rescaling time by c rescales mu, beta and lambda0 by 1/c and leaves alpha alone."""
    c = 4.0
    events = simulate_noisy_hawkes(uni_theta, SimulationConfig(horizon=1000.0, seed=21))
    cfg = FitConfig(n_restarts=1, m_policy=1000, periodogram_method="direct")
    base = fit(univariate_model("beta", 1.0), events, cfg).theta_hat
    scaled = fit(univariate_model("beta", 1.0 / c), events.scaled(c), cfg).theta_hat

    assert scaled.alpha[0, 0] == pytest.approx(base.alpha[0, 0], rel=1e-2)
    assert c * scaled.mu[0] == pytest.approx(base.mu[0], rel=1e-2)
    assert c * scaled.lambda0 == pytest.approx(base.lambda0, rel=1e-2)


def test_nufft_is_faster_on_long_series():
    pytest.importorskip("finufft")
    theta = NoisyHawkesParams.univariate(1.0, 0.5, 1.0, 1.6)
    events = simulate_noisy_hawkes(theta, SimulationConfig(horizon=4000.0, seed=0))
    M = events.n_events

    start = time.time()
    fast = periodogram(events, M, method="nufft")
    fast_time = time.time() - start
    start = time.time()
    direct = periodogram(events, M, method="direct")
    direct_time = time.time() - start

    assert np.max(np.abs(fast.values - direct.values)) / np.max(np.abs(direct.values)) < 1e-6
    assert fast_time < direct_time


@pytest.mark.slow
@pytest.mark.parametrize(
    "model",
    ["Q_mu", "Q_alpha", "Q_beta", "Q_lambda0", "lambda1", "lambda2", "lambda3", "lambda4"],
)
def test_identifiable_models_are_injective(model):
    start = time.time()
    report = injectivity_probe(model, n_pairs=500, seed=0)
    assert report.injective
    assert report.min_separated_discrepancy >= 1e-6
    assert time.time() - start < 30.0


@pytest.mark.slow
def test_periodogram_is_unbiased():
    """Mean periodogram over 500 replicates is within 3 standard errors of the density."""
    theta = NoisyHawkesParams.univariate(1.0, 0.5, 1.0, 1.6)
    horizon, n_rep, M = 500.0, 500, 20
    values = np.empty((n_rep, M))
    for r in range(n_rep):
        events = simulate_noisy_hawkes(theta, SimulationConfig(horizon=horizon, seed=10_000 + r))
        values[r] = periodogram(events, M, method="direct").diagonal()[:, 0]
    freqs = np.arange(1, M + 1) / horizon
    f = spectral_density_uni(theta, freqs)
    se = values.std(axis=0, ddof=1) / np.sqrt(n_rep)
    assert np.all(np.abs(values.mean(axis=0) - f) <= 3 * se)


@pytest.mark.slow
def test_compensation_keeps_mean_intensity(tmp_path):
    cfg = ExperimentConfig(
        experiment="compensation",
        grid={"fixed": ["beta"], "horizon": [8000]},
        trials=20,
        seed=0,
        out=str(tmp_path),
    )
    result = run_experiment(cfg)
    summary = result.summary.iloc[0]
    assert summary["mN_rel_error_mean"] <= 0.05
    assert summary["corr_mu_alpha"] < 0


UNIVARIATE_MODEL_NAMES = ["Q_mu", "Q_alpha", "Q_beta", "Q_lambda0"]


@pytest.mark.slow
@pytest.mark.parametrize("model", UNIVARIATE_MODEL_NAMES)
def test_error_decreases_with_horizon(model):
    cfg = ExperimentConfig(
        experiment="univariate",
        grid={"model": [model], "horizon": [250, 8000]},
        trials=20,
        seed=0,
    )
    summary = run_experiment(cfg, out="").summary.set_index("horizon")
    assert summary.loc[8000, "rel_error_mean"] <= 0.5 * summary.loc[250, "rel_error_mean"]


@pytest.mark.slow
@pytest.mark.parametrize("model", UNIVARIATE_MODEL_NAMES)
def test_n_frequencies_match_n_log_n_at_a_fraction_of_the_cost(model):
    """M = N loses little accuracy against M = N log N and fits at least 5x faster."""
    theta = NoisyHawkesParams.univariate(1.0, 0.5, 1.0, 1.6)
    slot = model[2:]
    fixed = {"mu": 1.0, "alpha": 0.5, "beta": 1.0, "lambda0": 1.6}[slot]
    spec = univariate_model(slot, fixed)

    errors = {"n": [], "nlogn": []}
    runtimes = {"n": [], "nlogn": []}
    for trial in range(20):
        events = simulate_noisy_hawkes(theta, SimulationConfig(horizon=8000.0, seed=500 + trial))
        for policy in ("n", "nlogn"):
            start = time.perf_counter()
            result = fit(spec, events, FitConfig(seed=trial, m_policy=policy))
            runtimes[policy].append(time.perf_counter() - start)
            errors[policy].append(relative_error(result.theta_hat, theta, spec))

    err_n, err_nlogn = np.mean(errors["n"]), np.mean(errors["nlogn"])
    assert abs(err_n - err_nlogn) < 0.5 * err_nlogn
    assert np.mean(runtimes["nlogn"]) >= 5 * np.mean(runtimes["n"])


@pytest.mark.slow
@pytest.mark.parametrize("scenario", [1, 2])
def test_support_recovery_on_replicates(scenario):
    theta = bivariate_params(scenario=scenario)
    truth = theta.alpha > 0
    correct = 0
    for rep in range(10):
        replicates = [
            simulate_noisy_hawkes(theta, SimulationConfig(horizon=3000.0, seed=1000 * rep + s))
            for s in range(20)
        ]
        report, _ = three_step_fit(replicates, SupportConfig(fit=FitConfig(seed=rep)))
        assert np.all(report.null_props[truth] == 0)
        assert np.all(report.null_props[~truth] >= 0.1)
        correct += bool(np.array_equal(report.support_mask, truth))
    assert correct >= 9


@pytest.mark.slow
def test_spike_slab_accuracy():
    cfg = ExperimentConfig(
        experiment="spike_slab", trials=30, seed=0, params={"target_events": 5000}
    )
    result = run_experiment(cfg, out="")
    curve = result.tables["accuracy"].set_index("lambda_max")
    overall = curve.loc[np.inf, "accuracy"]
    assert overall >= 0.5
    assert curve.loc[2.8, "accuracy"] > overall


def test_tau_range_sample_stays_inside():
    rng = np.random.default_rng(4)
    tau_range = TauRange(lo=-1e-3, hi=1e-3)
    assert all(tau_range.contains(tau_range.sample(rng)) for _ in range(100))
