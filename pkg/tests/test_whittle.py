"""Tests for model specifications, the spectral log-likelihood and fitting."""

import dataclasses
from types import SimpleNamespace

import numpy as np
import pytest

from noisyhawkes import (
    FitConfig,
    ModelSpec,
    NoisyHawkesParams,
    SimulationConfig,
    fit,
    frequency_count,
    full_model,
    periodogram,
    simulate_hawkes,
    simulate_noisy_hawkes,
    spectral_loglik,
    support_model,
    univariate_model,
)
from noisyhawkes.exceptions import FitError, SpectralEvaluationError
from noisyhawkes.utils import spectral_radius
from noisyhawkes.whittle import FIXED, FREE, ZERO, loglik_gradient, relative_error

from .test_utils import bivariate_params, evenly_spaced_events, make_events


def test_model_spec_slots():
    spec = full_model(2)
    assert spec.n_free == 9
    assert spec.slot_names[:3] == ["mu[0]", "mu[1]", "alpha[0,0]"]
    assert spec.slot_names[-1] == "lambda0"
    assert spec.support_mask.all()

    known = full_model(2, lambda0=0.5)
    assert known.n_free == 8
    assert known.status[-1] == FIXED
    assert known.name == "Q_known_noise"


def test_support_model_pins_beta_of_empty_row():
    """A structurally zero row of alpha fixes its decay rate to 1."""
    spec = support_model([[True, True], [False, False]])
    d = 2
    assert spec.status[d + 2] == ZERO and spec.status[d + 3] == ZERO
    assert spec.status[d + d * d + 1] == FIXED
    assert spec.values[d + d * d + 1] == 1.0
    assert spec.status[d + d * d] == FREE
    assert spec.name == "Q_support[11;00]"

    lambda1 = support_model([[True, False], [True, False]], name="lambda1")
    assert lambda1.n_free == 2 + 2 + 2 + 1
    assert lambda1.support_mask.tolist() == [[True, False], [True, False]]


def test_univariate_models():
    for slot, name in [("mu", "Q_mu"), ("alpha", "Q_alpha"), ("beta", "Q_beta"), ("lambda0", "Q_lambda0")]:
        spec = univariate_model(slot, 0.5)
        assert spec.name == name
        assert spec.n_free == 3
        assert slot not in [n.split("[")[0] for n in spec.free_names]

    with pytest.raises(ValueError) as excinfo:
        univariate_model("alpha", 1.5)
    assert "alpha" in str(excinfo.value)

    with pytest.raises(ValueError) as excinfo:
        univariate_model("gamma")
    assert "fixed must be one of" in str(excinfo.value)


def test_model_spec_validation():
    spec = full_model(1)
    status = list(spec.status)
    status[0] = ZERO
    with pytest.raises(ValueError) as excinfo:
        ModelSpec(d=1, status=tuple(status), values=spec.values, bounds=spec.bounds)
    assert "zero" in str(excinfo.value)

    with pytest.raises(ValueError) as excinfo:
        ModelSpec(d=1, status=(FIXED,) * 4, values=[1.0, 0.5, 1.0, 0.1], bounds=spec.bounds)
    assert "free parameter" in str(excinfo.value)

    with pytest.raises(ValueError) as excinfo:
        ModelSpec(d=1, status=(FREE,) * 3, values=[0.0] * 3, bounds=spec.bounds[:3])
    assert "slots" in str(excinfo.value)


def test_model_spec_dict_round_trip():
    spec = support_model([[True, False], [True, True]], lambda0=0.5, name="lambda3")
    back = ModelSpec.from_dict(spec.to_dict())
    assert back.status == spec.status
    assert np.array_equal(back.values, spec.values)
    assert back.name == "lambda3"

    named = ModelSpec.from_dict({"model": "Q_beta", "fixed_value": 2.0})
    assert named.name == "Q_beta"
    assert named.values[2] == 2.0

    from_support = ModelSpec.from_dict({"d": 2, "support": [[1, 0], [1, 0]]})
    assert from_support.support_mask.tolist() == [[True, False], [True, False]]

    with pytest.raises(ValueError) as excinfo:
        ModelSpec.from_dict({"model": "Q_gamma"})
    assert "Unknown model" in str(excinfo.value)


def test_conforms():
    spec = univariate_model("beta", 1.0)
    assert spec.conforms(NoisyHawkesParams.univariate(0.7, 0.3, 1.0, 0.2))
    assert not spec.conforms(NoisyHawkesParams.univariate(0.7, 0.3, 1.1, 0.2))


def test_frequency_count_examples():
    events = evenly_spaced_events(100, 50.0)
    assert frequency_count("n", events) == 100
    assert frequency_count("nlogn", events) == 461
    assert frequency_count("n_log_n", events) == 461
    assert frequency_count(2048, events) == 2048
    assert frequency_count("2048", events) == 2048

    with pytest.raises(ValueError):
        frequency_count(0, events)
    with pytest.raises(ValueError) as excinfo:
        frequency_count("sqrt", events)
    assert "M policy" in str(excinfo.value)
    with pytest.raises(ValueError) as excinfo:
        frequency_count("n", make_events([[]], 10.0))
    assert "nonempty" in str(excinfo.value)


def test_constant_density_maximiser_is_mean_periodogram(uni_events):
    """With alpha = 0 the density is a constant c, maximised at c = mean(I_k)."""
    pg = periodogram(uni_events, 500, method="direct")
    spec = univariate_model("beta", 1.0)
    c_star = float(np.mean(np.real(pg.values[:, 0, 0])))

    def loglik(c):
        theta = NoisyHawkesParams.univariate(c / 2.0, 0.0, 1.0, c / 2.0)
        return spectral_loglik(spec, theta, pg)

    expected = -pg.M * (np.log(c_star) + 1.0) / pg.horizon
    assert loglik(c_star) == pytest.approx(expected, rel=1e-10)
    for factor in (0.8, 0.95, 1.05, 1.25):
        assert loglik(c_star * factor) < loglik(c_star)


def test_loglik_closed_form_matches_matrix(biv_events, biv_theta, uni_events, uni_theta):
    pg = periodogram(biv_events, 300, method="direct")
    spec = full_model(2)
    auto = spectral_loglik(spec, biv_theta, pg)
    matrix = spectral_loglik(spec, biv_theta, pg, method="matrix")
    assert auto == pytest.approx(matrix, rel=1e-9)

    pg1 = periodogram(uni_events, 300, method="direct")
    spec1 = full_model(1)
    assert spectral_loglik(spec1, uni_theta, pg1) == pytest.approx(
        spectral_loglik(spec1, uni_theta, pg1, method="matrix"), rel=1e-9
    )


def test_loglik_rejects_inadmissible_input(biv_events, uni_theta):
    pg = periodogram(biv_events, 50, method="direct")
    with pytest.raises(ValueError) as excinfo:
        spectral_loglik(full_model(2), uni_theta, pg)
    assert "dimension" in str(excinfo.value)

    explosive = NoisyHawkesParams(mu=[1.0, 1.0], alpha=[[0.6, 0.5], [0.5, 0.6]], beta=[1.0, 1.0])
    with pytest.raises(SpectralEvaluationError):
        spectral_loglik(full_model(2), explosive, pg)

    with pytest.raises(ValueError) as excinfo:
        spectral_loglik(full_model(2), bivariate_params(), pg, method="fast")
    assert "method" in str(excinfo.value)


def test_analytic_gradient_matches_finite_differences(uni_events, uni_theta):
    pg = periodogram(uni_events, 400, method="direct")
    spec = full_model(1)
    x = spec.free_vector(uni_theta)
    grad = loglik_gradient(spec, uni_theta, pg)

    step = 1e-6
    numeric = np.empty_like(x)
    for k in range(x.size):
        up, down = x.copy(), x.copy()
        up[k] += step
        down[k] -= step
        numeric[k] = (
            spectral_loglik(spec, spec.to_params(up), pg)
            - spectral_loglik(spec, spec.to_params(down), pg)
        ) / (2 * step)
    assert np.allclose(grad, numeric, rtol=1e-5, atol=1e-8)

    fixed_beta = univariate_model("beta", 1.0)
    assert loglik_gradient(fixed_beta, uni_theta, pg).shape == (3,)


def test_fit_univariate(uni_events, uni_theta):
    """The fit conforms to the model and beats the true parameters in likelihood."""
    spec = univariate_model("beta", 1.0)
    cfg = FitConfig(n_restarts=3, seed=0, m_policy=1000, periodogram_method="direct")
    result = fit(spec, uni_events, cfg)

    assert spec.conforms(result.theta_hat)
    assert result.M_used == 1000
    assert len(result.restarts) == 3
    assert 0 <= result.chosen_start < 3
    assert np.isfinite(result.loglik)

    pg = periodogram(uni_events, 1000, method="direct")
    assert result.loglik >= spectral_loglik(spec, uni_theta, pg) - 1e-9
    assert relative_error(result.theta_hat, uni_theta, spec) < 1.0

    summary = result.to_dict(verbose=True)
    assert summary["model"] == "Q_beta"
    assert len(summary["restarts"]) == 3
    assert "restarts" not in result.to_dict()


def test_fit_is_reproducible(uni_events):
    spec = univariate_model("lambda0", 0.6)
    cfg = FitConfig(n_restarts=2, seed=5, m_policy=300, periodogram_method="direct")
    a = fit(spec, uni_events, cfg)
    b = fit(spec, uni_events, cfg)
    assert a.theta_hat.allclose(b.theta_hat, rtol=0.0)
    assert a.loglik == b.loglik


def test_fit_bivariate_conforms(biv_events):
    spec = support_model([[True, False], [True, True]], name="scenario_2")
    cfg = FitConfig(n_restarts=2, seed=1, m_policy=300, periodogram_method="direct")
    result = fit(spec, biv_events, cfg)
    assert spec.conforms(result.theta_hat)
    assert result.theta_hat.alpha[0, 1] == 0.0
    assert result.theta_hat.is_stationary()


def test_fit_on_replicates_sums_frequencies(uni_theta):
    replicates = [
        simulate_noisy_hawkes(uni_theta, SimulationConfig(horizon=200.0, seed=s)) for s in range(3)
    ]
    cfg = FitConfig(n_restarts=2, seed=0, m_policy=100, periodogram_method="direct")
    result = fit(univariate_model("beta", 1.0), replicates, cfg)
    assert result.M_used == 300


def test_misspecified_fit_still_returns_admissible_point():
    """Pure Poisson data fitted with alpha held at 0.5."""
    theta = NoisyHawkesParams.univariate(2.0, 0.0, 1.0)
    events = simulate_hawkes(theta, SimulationConfig(horizon=500.0, seed=3))
    result = fit(
        univariate_model("alpha", 0.5),
        events,
        FitConfig(n_restarts=2, seed=0, m_policy=300, periodogram_method="direct"),
    )
    assert result.theta_hat.alpha[0, 0] == 0.5
    assert np.all(result.theta_hat.mu > 0)
    assert isinstance(result.boundary, list)


def test_fit_rejects_bad_input(uni_events):
    with pytest.raises(ValueError) as excinfo:
        fit(full_model(2), uni_events)
    assert "d=" in str(excinfo.value)

    with pytest.raises(ValueError) as excinfo:
        fit(full_model(1), make_events([[]], 10.0))
    assert "nonempty" in str(excinfo.value)

    with pytest.raises(ValueError):
        FitConfig(n_restarts=0)
    with pytest.raises(ValueError):
        FitConfig(gradient="newton")


def test_fit_error_when_every_restart_fails(uni_events, monkeypatch):
    """All restarts hitting inadmissible points raise FitError with the traces."""
    import noisyhawkes.whittle as whittle

    def broken(*args, **kwargs):
        raise SpectralEvaluationError("not positive definite")

    monkeypatch.setattr(whittle, "spectral_loglik", broken)
    cfg = FitConfig(n_restarts=2, seed=0, m_policy=50, periodogram_method="direct")
    with pytest.raises(FitError) as excinfo:
        fit(univariate_model("beta", 1.0), uni_events, cfg)
    assert len(excinfo.value.traces) == 2
    assert "restarts failed" in str(excinfo.value)


def test_estimate_is_shrunk_inside_the_stationary_region(biv_events, monkeypatch):
    """An optimiser end point with spectral radius above 1 is returned shrunk onto the limit."""
    import noisyhawkes.whittle as whittle

    spec = full_model(2)
    explosive = NoisyHawkesParams(
        mu=[1.0, 1.0], alpha=[[0.6, 0.6], [0.6, 0.6]], beta=[1.0, 1.0], lambda0=0.5
    )

    def stuck(fun, x0, **kwargs):
        return SimpleNamespace(x=spec.free_vector(explosive), status=0, nit=1, message="stub")

    monkeypatch.setattr(whittle, "minimize", stuck)
    cfg = FitConfig(n_restarts=1, seed=0, m_policy=100, periodogram_method="direct")
    result = fit(spec, biv_events, cfg)

    rho = spectral_radius(result.theta_hat.alpha)
    assert rho < 1.0 - cfg.radius_margin
    assert rho == pytest.approx(1.0 - cfg.radius_margin, rel=1e-6)
    assert np.allclose(result.theta_hat.alpha, result.theta_hat.alpha[0, 0])
    assert spec.conforms(result.theta_hat)


def test_shrinking_leaves_fixed_alpha_entries_alone():
    from noisyhawkes.whittle import _shrink_to_radius

    base = full_model(2)
    status, values = list(base.status), base.values.copy()
    status[2], values[2] = FIXED, 0.5  # alpha[0, 0]
    spec = dataclasses.replace(base, status=tuple(status), values=values)
    theta = NoisyHawkesParams(
        mu=[1.0, 1.0], alpha=[[0.5, 0.9], [0.9, 0.5]], beta=[1.0, 1.0], lambda0=0.5
    )

    x, rho = _shrink_to_radius(spec, spec.free_vector(theta), 0.99)
    shrunk = spec.to_params(x, validate=False)
    assert rho == pytest.approx(1.4)
    assert shrunk.alpha[0, 0] == 0.5
    # the free entries share one factor
    assert shrunk.alpha[0, 1] == shrunk.alpha[1, 0]
    assert shrunk.alpha[0, 1] / shrunk.alpha[1, 1] == pytest.approx(0.9 / 0.5)
    assert shrunk.alpha[0, 1] < 0.9
    assert spectral_radius(shrunk.alpha) <= 0.99
    assert spectral_radius(shrunk.alpha) == pytest.approx(0.99, rel=1e-6)

    # already inside: untouched
    inside = theta.replace(alpha=[[0.5, 0.1], [0.1, 0.5]])
    x, rho = _shrink_to_radius(spec, spec.free_vector(inside), 0.99)
    assert np.array_equal(x, spec.free_vector(inside))
    assert rho == pytest.approx(0.6)
