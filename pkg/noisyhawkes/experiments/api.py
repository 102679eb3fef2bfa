"""Registry and entry point of the experiment runners."""

from typing import List, Optional

from ..config import ExperimentConfig
from ..logger import logger
from .base import ExperimentResult

# Registry of available experiments
_EXPERIMENT_REGISTRY = {}


def register_experiment(name: str, experiment_class):
    """
    Register an experiment runner for use with run_experiment().

    Args:
        name: Experiment id used in config files and on the command line
        experiment_class: Class that implements the BaseExperiment interface
    """
    from .base import BaseExperiment

    if not isinstance(experiment_class, type) or not issubclass(experiment_class, BaseExperiment):
        raise ValueError(f"Class {experiment_class!r} must inherit from BaseExperiment")
    _EXPERIMENT_REGISTRY[name] = experiment_class


def get_experiment(name: str):
    """Return the experiment class registered under ``name``."""
    if name not in _EXPERIMENT_REGISTRY:
        raise ValueError(
            f"Unknown experiment: {name}. Available experiments: {list(_EXPERIMENT_REGISTRY.keys())}"
        )
    return _EXPERIMENT_REGISTRY[name]


def list_available_experiments() -> List[str]:
    return list(_EXPERIMENT_REGISTRY.keys())


def run_experiment(cfg: ExperimentConfig, out: Optional[str] = None) -> ExperimentResult:
    """
    Run the experiment named by ``cfg`` and write its tables.

    Args:
        cfg: Experiment configuration
        out: Output directory, defaults to ``cfg.out``; pass "" to skip writing

    Returns:
        ExperimentResult with trial rows, per-cell summary and extra tables
    """
    experiment = get_experiment(cfg.experiment)()
    result = experiment.run(cfg)
    target = cfg.out if out is None else out
    if target:
        result.write(target)
    else:
        logger.debug("No output directory, results kept in memory")
    return result
