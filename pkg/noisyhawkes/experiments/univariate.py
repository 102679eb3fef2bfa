"""Univariate estimation experiments: accuracy sweeps and the compensation study."""

from typing import Any, Dict

import numpy as np
import pandas as pd

from ..config import ExperimentConfig
from ..params import NoisyHawkesParams, hawkes_mean_intensity
from ..simulation import SimulationConfig, simulate_noisy_hawkes
from ..utils import derive_seeds
from ..whittle import fit, relative_error, univariate_model
from .base import BaseExperiment, error_summary

UNIVARIATE_MODELS = {"Q_mu": "mu", "Q_alpha": "alpha", "Q_beta": "beta", "Q_lambda0": "lambda0"}
HORIZONS = [250, 500, 1000, 2000, 4000, 8000]
NOISE_RATIOS = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0]


def true_params(cfg: ExperimentConfig, defaults: Dict[str, Any], noise_ratio=None):
    """Ground truth of a univariate experiment; ``noise_ratio`` sets lambda0 = ratio * m^H."""
    get = lambda key: cfg.params.get(key, defaults[key])  # noqa: E731
    theta = NoisyHawkesParams.univariate(get("mu"), get("alpha"), get("beta"), get("lambda0"))
    if noise_ratio is not None and not pd.isna(noise_ratio):
        theta = theta.replace(lambda0=float(noise_ratio) * float(hawkes_mean_intensity(theta)[0]))
    return theta


def _fixed_value(theta: NoisyHawkesParams, slot: str) -> float:
    return {
        "mu": theta.mu[0],
        "alpha": theta.alpha[0, 0],
        "beta": theta.beta[0],
        "lambda0": theta.lambda0,
    }[slot]


def _estimates(theta: NoisyHawkesParams) -> Dict[str, float]:
    return {
        "mu_hat": float(theta.mu[0]),
        "alpha_hat": float(theta.alpha[0, 0]),
        "beta_hat": float(theta.beta[0]),
        "lambda0_hat": float(theta.lambda0),
    }


class UnivariateSweep(BaseExperiment):
    """
    Relative error of the four identifiable univariate models.

    The default grid sweeps the horizon; adding a ``noise_ratio`` axis sweeps
    lambda0 / m^H instead (typically at a single horizon of 8000).
    """

    name = "univariate"
    default_grid = {"model": list(UNIVARIATE_MODELS), "horizon": HORIZONS}
    default_params = {"mu": 1.0, "alpha": 0.5, "beta": 1.0, "lambda0": 1.6}

    def grid(self, cfg):
        grid = super().grid(cfg)
        grid.setdefault("m_policy", [cfg.m_policy])
        return grid

    def run_trial(self, cfg, cell, seed):
        model = cell["model"]
        if model not in UNIVARIATE_MODELS:
            raise ValueError(f"Unknown model: {model}. Available models: {list(UNIVARIATE_MODELS)}")
        theta = true_params(cfg, self.default_params, cell.get("noise_ratio"))
        slot = UNIVARIATE_MODELS[model]
        spec = univariate_model(slot, _fixed_value(theta, slot))
        sim_seed, fit_seed = derive_seeds(seed, 2)
        events = simulate_noisy_hawkes(
            theta, SimulationConfig(float(cell["horizon"]), self.burn_in(cfg), sim_seed)
        )
        result = fit(spec, events, self.fit_config(cfg, fit_seed, m_policy=cell["m_policy"]))
        return {
            "lambda0_true": theta.lambda0,
            "n_events": events.n_events,
            "M_used": result.M_used,
            "rel_error": relative_error(result.theta_hat, theta, spec),
            "loglik": result.loglik,
            "converged": result.converged,
            "fit_runtime": result.runtime,
            **_estimates(result.theta_hat),
        }

    def summarize(self, trials, cfg):
        by = [k for k in self.grid(cfg) if k in trials.columns]
        return error_summary(trials, by, ["rel_error"])


class CompensationStudy(BaseExperiment):
    """
    Repeated fits with one parameter held at its true value.

    With beta fixed, errors on mu are balanced by alpha and lambda0 so that
    the estimated mean intensity m^N = lambda0 + mu / (1 - alpha) stays
    accurate. Fixing alpha instead shows mu and lambda0 compensating.
    """

    name = "compensation"
    default_grid = {"fixed": ["beta"], "horizon": [8000]}
    default_params = {"mu": 1.0, "alpha": 0.5, "beta": 1.0, "lambda0": 1.2}

    def run_trial(self, cfg, cell, seed):
        slot = cell["fixed"]
        if slot not in ("alpha", "beta"):
            raise ValueError(f"fixed must be 'alpha' or 'beta', got {slot}")
        theta = true_params(cfg, self.default_params)
        spec = univariate_model(slot, _fixed_value(theta, slot))
        sim_seed, fit_seed = derive_seeds(seed, 2)
        events = simulate_noisy_hawkes(
            theta, SimulationConfig(float(cell["horizon"]), self.burn_in(cfg), sim_seed)
        )
        result = fit(spec, events, self.fit_config(cfg, fit_seed))
        est = _estimates(result.theta_hat)
        m_true = theta.lambda0 + float(hawkes_mean_intensity(theta)[0])
        m_hat = est["lambda0_hat"] + est["mu_hat"] / (1.0 - est["alpha_hat"])
        return {
            **est,
            "mN_hat": m_hat,
            "mN_true": m_true,
            "mN_rel_error": abs(m_hat - m_true) / m_true,
            "rel_error": relative_error(result.theta_hat, theta, spec),
            "converged": result.converged,
        }

    def order_trials(self, trials):
        if "mu_hat" not in trials.columns:
            return trials
        return trials.sort_values(
            ["cell", "mu_hat", "trial"], kind="mergesort", na_position="last"
        ).reset_index(drop=True)

    def summarize(self, trials, cfg):
        by = [k for k in self.grid(cfg) if k in trials.columns]
        out = error_summary(trials, by, ["mN_hat", "mN_rel_error", "rel_error"])
        ok = trials[trials["status"] == "ok"]
        if ok.empty:
            return out
        rows = []
        for key, group in ok.groupby(by, sort=False):
            key = key if isinstance(key, tuple) else (key,)
            rows.append(
                {
                    **dict(zip(by, key)),
                    "mN_true": float(group["mN_true"].iloc[0]),
                    "corr_mu_alpha": _corr(group["mu_hat"], group["alpha_hat"]),
                    "corr_mu_lambda0": _corr(group["mu_hat"], group["lambda0_hat"]),
                }
            )
        return out.merge(pd.DataFrame(rows), on=by, how="left")


def _corr(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2 or np.std(x) == 0 or np.std(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])
