"""Experiment configuration files."""

import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional, Union

from .exceptions import ConfigError
from .logger import logger

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_TOP_LEVEL_KEYS = {"experiment", "trials", "seed", "m_policy", "out", "jobs", "grid", "params", "fit"}


@dataclass
class ExperimentConfig:
    """
    Declarative description of one experiment run.

    Attributes:
        experiment: Registered experiment id.
        grid: Cell coordinates, e.g. ``{"horizon": [250, 500]}``.
        params: Ground-truth and model settings of the experiment.
        fit: Overrides of ``FitConfig`` fields.
        trials: Trials per grid cell.
        seed: Master seed.
        m_policy: Frequency count policy ("n", "nlogn" or an integer).
        out: Output directory.
        jobs: Worker processes.
    """

    experiment: str
    grid: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    fit: Dict[str, Any] = field(default_factory=dict)
    trials: int = 20
    seed: int = 0
    m_policy: Union[str, int] = "n"
    out: str = "results"
    jobs: int = 1

    def __post_init__(self):
        if not self.experiment:
            raise ConfigError("experiment id must not be empty")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError(f"jobs must be a positive integer, got {self.jobs}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")
        for key, values in self.grid.items():
            if isinstance(values, (list, tuple)) and len(values) == 0:
                raise ConfigError(f"grid axis '{key}' is empty")

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        unknown = set(data) - _TOP_LEVEL_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config must name an 'experiment'")
        for table in ("grid", "params", "fit"):
            if table in data and not isinstance(data[table], dict):
                raise ConfigError(f"'{table}' must be a table")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with every non-None override applied (CLI flags win over the file)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if changes:
            logger.debug(f"Config overrides: {changes}")
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_config(path: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """
    Load an ExperimentConfig from a TOML file.

    Parameters:
        path (str): TOML file with top-level keys and [grid], [params], [fit] tables.
        experiment (str): Experiment id, used when the file does not name one.

    Raises:
        ConfigError: If the file is missing, malformed or inconsistent.
    """
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as exc:
        logger.error(f"Config file not found: {path}")
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        logger.error(f"Malformed config file {path}: {exc}")
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    if experiment is not None:
        if data.get("experiment", experiment) != experiment:
            raise ConfigError(
                f"config file is for experiment '{data['experiment']}', not '{experiment}'"
            )
        data.setdefault("experiment", experiment)
    logger.info(f"Loaded config for experiment {data.get('experiment')} from {path}")
    return ExperimentConfig.from_mapping(data)
