"""Support recovery on randomly drawn bivariate parameters."""

import numpy as np
import pandas as pd

from ..logger import logger
from ..params import NoisyHawkesParams, mean_intensity
from ..simulation import SimulationConfig, simulate_noisy_hawkes
from ..support import SupportConfig, subsample_support
from ..utils import check_random_state, derive_seeds, spectral_radius
from .base import BaseExperiment, trial_counts

# Exp(1/2) is the exponential law of rate 1/2
EXP_SCALE = 2.0
SLAB_PROBABILITY = 2.0 / 3.0
ALPHA_FLOOR = 0.1
BETA_OFFSET = 0.5
LAMBDA0_OFFSET = 0.1
MU_RATIO_RANGE = (0.5, 2.0)
LAMBDA_MAX_GRID = [0.5, 1.0, 1.5, 2.0, 2.4, 2.8, 3.5, 5.0]
_MAX_DRAWS = 10_000


def truncate_interactions(alpha, floor: float = ALPHA_FLOOR) -> np.ndarray:
    """Zero every interaction below ``floor``."""
    alpha = np.array(alpha, dtype=float)
    alpha[alpha < floor] = 0.0
    return alpha


def baselines_accepted(mu) -> bool:
    lo, hi = MU_RATIO_RANGE
    return bool(mu[1] > 0 and lo < mu[0] / mu[1] < hi)


def sample_spike_slab_params(rng=None, d: int = 2) -> NoisyHawkesParams:
    """
    Draw a stationary parameter tuple.

    beta_i ~ Exp(1/2) + 0.5, lambda0 ~ Exp(1/2) + 0.1, mu_i ~ Exp(1/2) with
    0.5 < mu_1 / mu_2 < 2, and alpha_ij = X_ij U_ij with X_ij ~ Exp(1/2),
    U_ij ~ Bernoulli(2/3), entries below 0.1 set to 0. Draws of mu and
    alpha are repeated until they pass the ratio filter and the spectral
    radius is below 1.
    """
    rng = check_random_state(rng)
    beta = rng.exponential(EXP_SCALE, size=d) + BETA_OFFSET
    lambda0 = float(rng.exponential(EXP_SCALE) + LAMBDA0_OFFSET)
    for _ in range(_MAX_DRAWS):
        mu = rng.exponential(EXP_SCALE, size=d)
        if d != 2 or baselines_accepted(mu):
            break
    else:
        raise RuntimeError("could not draw baselines within the ratio filter")
    for _ in range(_MAX_DRAWS):
        slab = rng.exponential(EXP_SCALE, size=(d, d))
        spike = rng.binomial(1, SLAB_PROBABILITY, size=(d, d))
        alpha = truncate_interactions(slab * spike)
        if spectral_radius(alpha) < 1:
            break
    else:
        raise RuntimeError("could not draw a stationary interaction matrix")
    return NoisyHawkesParams(mu=mu, alpha=alpha, beta=beta, lambda0=lambda0)


def accuracy_curve(trials: pd.DataFrame, lambda_max_grid) -> pd.DataFrame:
    """Share of correct supports among succeeded trials with lambda0 < lambda_max."""
    ok = trials[trials["status"] == "ok"]
    rows = []
    for lam in list(lambda_max_grid) + [np.inf]:
        kept = ok[ok["lambda0"] < lam]
        rows.append(
            {
                "lambda_max": lam,
                "n": len(kept),
                "accuracy": float(kept["correct"].mean()) if len(kept) else float("nan"),
            }
        )
    return pd.DataFrame(rows)


class SpikeSlabStudy(BaseExperiment):
    """
    Support recovery over random interaction networks.

    Each trial draws parameters, simulates about ``target_events`` events on
    a single window, partitions it into ``n_parts`` windows and screens the
    support with the null-proportion rule.
    """

    name = "spike_slab"
    default_grid = {}
    default_params = {
        "target_events": 5000,
        "n_parts": 10,
        "null_proportion_cutoff": 0.3,
        "lambda_max": LAMBDA_MAX_GRID,
    }

    def cells(self, cfg):
        return [{}]

    def run_trial(self, cfg, cell, seed):
        draw_seed, sim_seed, fit_seed = derive_seeds(seed, 3)
        theta = sample_spike_slab_params(draw_seed)
        rate = float(np.sum(mean_intensity(theta)))
        horizon = float(self.param(cfg, "target_events")) / rate
        logger.debug(f"Spike-and-slab draw with total rate {rate:.3g}, horizon {horizon:.1f}")
        events = simulate_noisy_hawkes(theta, SimulationConfig(horizon, self.burn_in(cfg), sim_seed))
        support_cfg = SupportConfig(
            rule="null_proportion",
            null_proportion_cutoff=float(self.param(cfg, "null_proportion_cutoff")),
            n_parts=int(self.param(cfg, "n_parts")),
            fit=self.fit_config(cfg, fit_seed),
        )
        report = subsample_support(events, support_cfg)
        truth = theta.alpha > 0
        return {
            "lambda0": theta.lambda0,
            "horizon": horizon,
            "n_events": events.n_events,
            "true_support": "".join(str(int(v)) for v in truth.ravel()),
            "detected_support": "".join(str(int(v)) for v in report.support_mask.ravel()),
            "correct": bool(np.array_equal(report.support_mask, truth)),
        }

    def summarize(self, trials, cfg):
        counts = trial_counts(trials, ["cell"])
        ok = trials[trials["status"] == "ok"]
        counts["accuracy"] = float(ok["correct"].mean()) if len(ok) else float("nan")
        return counts

    def extras(self, trials, cfg):
        if "lambda0" not in trials.columns:
            return {}, {}
        return {"accuracy": accuracy_curve(trials, self.param(cfg, "lambda_max"))}, {}
