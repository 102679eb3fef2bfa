"""Bivariate experiments: cross-interaction sweep, two support scenarios and support recovery."""

from typing import Dict, List

import numpy as np
import pandas as pd

from ..params import NoisyHawkesParams
from ..simulation import SimulationConfig, simulate_noisy_hawkes
from ..support import SupportConfig, screen_estimates, subsample_support, three_step_fit
from ..utils import derive_seeds
from ..whittle import fit, full_model, relative_error, support_model
from .base import BaseExperiment, error_summary, trial_counts

SCENARIOS = {
    1: [[0.5, 0.0], [0.4, 0.0]],
    2: [[0.5, 0.0], [0.4, 0.4]],
}
ALPHA21_LEVELS = [0.2, 0.4, 0.6, 0.8]
STUDIES = ("alpha21", "scenarios", "partitioned", "pipeline")
ENTRIES = [(i, j) for i in range(2) for j in range(2)]


def scenario_params(scenario: int, mu, beta, lambda0) -> NoisyHawkesParams:
    if int(scenario) not in SCENARIOS:
        raise ValueError(f"Unknown scenario: {scenario}. Available scenarios: {list(SCENARIOS)}")
    return NoisyHawkesParams(mu=mu, alpha=SCENARIOS[int(scenario)], beta=beta, lambda0=lambda0)


def _alpha_columns(alpha: np.ndarray, prefix: str) -> Dict[str, float]:
    return {f"{prefix}_{i + 1}{j + 1}": float(alpha[i, j]) for i, j in ENTRIES}


def _slot_errors(spec, theta_hat, theta_true) -> Dict[str, float]:
    """Relative error of every free slot, keyed ``err_<slot>``."""
    est, true = spec.free_vector(theta_hat), spec.free_vector(theta_true)
    return {
        f"err_{name}": float(abs(e - t) / abs(t)) if t != 0 else float(abs(e))
        for name, e, t in zip(spec.free_names, est, true)
    }


class BivariateScenarios(BaseExperiment):
    """
    Bivariate studies at mu = (1, 1), beta = (1, 1.3), lambda0 = 0.5.

    Studies (the ``study`` grid axis):
        alpha21: only alpha21 is non-null; sweep its level and the horizon.
        scenarios: fit the reduced and the full model on each replicate; the
            full-model estimates across replicates feed the support table.
        partitioned: one long observation split into windows of equal length,
            support screened on the windows.
        pipeline: the whole three-step procedure on a set of replicates.
    """

    name = "bivariate"
    default_grid = {"study": ["alpha21", "scenarios", "partitioned"]}
    default_params = {
        "mu": [1.0, 1.0],
        "beta": [1.0, 1.3],
        "lambda0": 0.5,
        "alpha21": ALPHA21_LEVELS,
        "alpha21_horizons": [1000, 3000],
        "scenarios": [1, 2],
        "horizon": 3000,
        "partition_horizon": 6000,
        "n_parts": 20,
        "n_replicates": 20,
    }

    def cells(self, cfg) -> List[Dict]:
        cells = []
        for study in self.grid(cfg)["study"]:
            if study not in STUDIES:
                raise ValueError(f"Unknown study: {study}. Available studies: {list(STUDIES)}")
            if study == "alpha21":
                for level in self.param(cfg, "alpha21"):
                    for horizon in self.param(cfg, "alpha21_horizons"):
                        cells.append({"study": study, "alpha21": level, "horizon": horizon})
            elif study == "partitioned":
                for scenario in self.param(cfg, "scenarios"):
                    cells.append(
                        {
                            "study": study,
                            "scenario": scenario,
                            "horizon": self.param(cfg, "partition_horizon"),
                        }
                    )
            else:
                for scenario in self.param(cfg, "scenarios"):
                    cells.append(
                        {"study": study, "scenario": scenario, "horizon": self.param(cfg, "horizon")}
                    )
        return cells

    def _base(self, cfg):
        return self.param(cfg, "mu"), self.param(cfg, "beta"), float(self.param(cfg, "lambda0"))

    def _simulate(self, cfg, theta, horizon, seed):
        return simulate_noisy_hawkes(theta, SimulationConfig(float(horizon), self.burn_in(cfg), seed))

    def run_trial(self, cfg, cell, seed):
        return getattr(self, f"_trial_{cell['study']}")(cfg, cell, seed)

    def _trial_alpha21(self, cfg, cell, seed):
        mu, beta, lambda0 = self._base(cfg)
        alpha = np.array([[0.0, 0.0], [float(cell["alpha21"]), 0.0]])
        # beta1 does not enter the spectrum when row 1 of alpha is zero
        theta = NoisyHawkesParams(mu=mu, alpha=alpha, beta=[1.0, beta[1]], lambda0=lambda0)
        spec = support_model(alpha > 0, name="lambda1")
        sim_seed, fit_seed = derive_seeds(seed, 2)
        events = self._simulate(cfg, theta, cell["horizon"], sim_seed)
        result = fit(spec, events, self.fit_config(cfg, fit_seed))
        return {
            "n_events": events.n_events,
            "rel_error": relative_error(result.theta_hat, theta, spec),
            **_slot_errors(spec, result.theta_hat, theta),
        }

    def _trial_scenarios(self, cfg, cell, seed):
        mu, beta, lambda0 = self._base(cfg)
        theta = scenario_params(cell["scenario"], mu, beta, lambda0)
        reduced = support_model(theta.alpha > 0, name=f"scenario_{cell['scenario']}")
        full = full_model(2)
        sim_seed, fit_seed = derive_seeds(seed, 2)
        events = self._simulate(cfg, theta, cell["horizon"], sim_seed)
        fit_cfg = self.fit_config(cfg, fit_seed)
        res_reduced = fit(reduced, events, fit_cfg)
        res_full = fit(full, events, fit_cfg)
        return {
            "n_events": events.n_events,
            "rel_error": relative_error(res_reduced.theta_hat, theta, reduced),
            "rel_error_full": relative_error(res_full.theta_hat, theta, full),
            "mu1_full": float(res_full.theta_hat.mu[0]),
            "mu2_full": float(res_full.theta_hat.mu[1]),
            "lambda0_full": float(res_full.theta_hat.lambda0),
            **_alpha_columns(res_reduced.theta_hat.alpha, "alpha_reduced"),
            **_alpha_columns(res_full.theta_hat.alpha, "alpha_full"),
        }

    def _support_config(self, cfg, fit_seed, **kw) -> SupportConfig:
        return SupportConfig(fit=self.fit_config(cfg, fit_seed), **kw)

    def _trial_partitioned(self, cfg, cell, seed):
        mu, beta, lambda0 = self._base(cfg)
        theta = scenario_params(cell["scenario"], mu, beta, lambda0)
        sim_seed, fit_seed = derive_seeds(seed, 2)
        events = self._simulate(cfg, theta, cell["horizon"], sim_seed)
        report = subsample_support(
            events, self._support_config(cfg, fit_seed, n_parts=int(self.param(cfg, "n_parts")))
        )
        return {
            "n_events": events.n_events,
            "mask_correct": bool(np.array_equal(report.support_mask, theta.alpha > 0)),
            **_alpha_columns(report.quantiles, "quantile"),
            **_alpha_columns(report.null_props, "null_prop"),
        }

    def _trial_pipeline(self, cfg, cell, seed):
        mu, beta, lambda0 = self._base(cfg)
        theta = scenario_params(cell["scenario"], mu, beta, lambda0)
        n = int(self.param(cfg, "n_replicates"))
        seeds = derive_seeds(seed, n + 1)
        replicates = [self._simulate(cfg, theta, cell["horizon"], s) for s in seeds[:n]]
        report, refit = three_step_fit(replicates, self._support_config(cfg, seeds[n]))
        correct = bool(np.array_equal(report.support_mask, theta.alpha > 0))
        row = {"mask_correct": correct, **_alpha_columns(report.null_props, "null_prop")}
        if refit is not None and correct:
            row["rel_error"] = relative_error(refit.theta_hat, theta, refit.spec)
        return row

    def summarize(self, trials, cfg):
        by = [c for c in ("study", "scenario", "alpha21", "horizon") if c in trials.columns]
        columns = [c for c in trials.columns if c.startswith("err_") or c.startswith("rel_error")]
        if "mask_correct" in trials.columns:
            trials = trials.assign(mask_correct=trials["mask_correct"].astype(float))
            columns.append("mask_correct")
        if not columns:
            return trial_counts(trials, by)
        return error_summary(trials, by, columns)

    def extras(self, trials, cfg):
        """Support table of the full-model estimates in the ``scenarios`` study."""
        tables, reports = {}, {}
        if "study" not in trials.columns:
            return tables, reports
        ok = trials[(trials["study"] == "scenarios") & (trials["status"] == "ok")]
        frames = []
        for scenario, group in ok.groupby("scenario", sort=True):
            columns = [f"alpha_full_{i + 1}{j + 1}" for i, j in ENTRIES]
            estimates = group[columns].to_numpy(dtype=float).reshape(-1, 2, 2)
            if len(estimates) == 0:
                continue
            report = screen_estimates(estimates)
            frame = report.to_frame()
            frame.insert(0, "scenario", int(scenario))
            frames.append(frame)
            reports[f"support_scenario_{int(scenario)}"] = report.to_dict()
        if frames:
            tables["support"] = pd.concat(frames, ignore_index=True)
        return tables, reports
