"""Experiment runners for noisyhawkes."""

from .api import (
    get_experiment,
    list_available_experiments,
    register_experiment,
    run_experiment,
)
from .base import BaseExperiment, ExperimentResult, run_trials
from .bivariate import BivariateScenarios
from .spike_slab import SpikeSlabStudy, sample_spike_slab_params
from .univariate import CompensationStudy, UnivariateSweep

# Register experiments
register_experiment("univariate", UnivariateSweep)
register_experiment("compensation", CompensationStudy)
register_experiment("bivariate", BivariateScenarios)
register_experiment("spike_slab", SpikeSlabStudy)


def run_univariate_sweep(cfg):
    """Run the univariate accuracy sweep."""
    return run_experiment(cfg.with_overrides(experiment="univariate"))


def run_compensation_study(cfg):
    """Run the compensation study."""
    return run_experiment(cfg.with_overrides(experiment="compensation"))


def run_bivariate_scenarios(cfg):
    """Run the bivariate studies."""
    return run_experiment(cfg.with_overrides(experiment="bivariate"))


def run_spike_slab_study(cfg):
    """Run the spike-and-slab support study."""
    return run_experiment(cfg.with_overrides(experiment="spike_slab"))


__all__ = [
    "BaseExperiment",
    "ExperimentResult",
    "BivariateScenarios",
    "CompensationStudy",
    "SpikeSlabStudy",
    "UnivariateSweep",
    "get_experiment",
    "list_available_experiments",
    "register_experiment",
    "run_experiment",
    "run_trials",
    "sample_spike_slab_params",
    "run_univariate_sweep",
    "run_compensation_study",
    "run_bivariate_scenarios",
    "run_spike_slab_study",
]
