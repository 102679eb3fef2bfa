"""Shared machinery of the experiment runners."""

import itertools
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy

from ..config import ExperimentConfig
from ..exceptions import NumericalError
from ..logger import logger
from ..simulation import DEFAULT_BURN_IN
from ..utils import derive_seeds
from ..whittle import FitConfig

# columns that identify one trial and allow replaying it
KEY_COLUMNS = ["cell", "trial", "seed", "status"]
# wall-clock columns; kept out of the trial rows so those stay byte-identical
TIMING_COLUMNS = ["runtime", "fit_runtime"]


def run_trials(task_fn: Callable, tasks: Sequence, jobs: int = 1) -> List:
    """Apply ``task_fn`` to every task, in order, on up to ``jobs`` processes."""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(task_fn, tasks))
    return [task_fn(task) for task in tasks]


def _run_trial(task) -> Dict[str, Any]:
    experiment_cls, cfg, cell_index, cell, trial, seed = task
    experiment = experiment_cls()
    row = {"cell": cell_index, **cell, "trial": trial, "seed": seed}
    start = time.perf_counter()
    try:
        row.update(experiment.run_trial(cfg, cell, seed))
        row["status"] = "ok"
        row["error"] = ""
    except (NumericalError, ValueError) as exc:
        logger.warning(f"{experiment.name}: trial {trial} of cell {cell_index} failed: {exc}")
        row["status"] = "failed"
        row["error"] = str(exc)
    row["runtime"] = time.perf_counter() - start
    return row


@dataclass
class ExperimentResult:
    """
    Tables produced by one experiment run.

    Attributes:
        name: Experiment id.
        trials: One deterministic row per trial.
        summary: Per-cell aggregates.
        timings: Wall-clock seconds per trial.
        timing_summary: Per-cell mean and standard deviation of the timings.
        tables: Further named tables (written as ``<name>.csv``).
        reports: Named JSON-ready reports (written as ``<name>.json``).
        manifest: Config echo, versions and runtime.
    """

    name: str
    trials: pd.DataFrame
    summary: pd.DataFrame
    timings: pd.DataFrame
    timing_summary: pd.DataFrame = field(default_factory=pd.DataFrame)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    reports: Dict[str, Dict] = field(default_factory=dict)
    manifest: Dict[str, Any] = field(default_factory=dict)

    def summary_with_timings(self) -> pd.DataFrame:
        """The per-cell summary joined with the per-cell wall-clock statistics."""
        if self.timing_summary.empty:
            return self.summary
        keys = [k for k in self.timing_summary.columns if k in self.summary.columns]
        return self.summary.merge(self.timing_summary, on=keys, how="left")

    def write(self, out_dir: str) -> List[str]:
        """Write every table and the manifest under ``out_dir``; returns the paths."""
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        frames = {
            "trials": self.trials,
            "summary": self.summary,
            "timings": self.timings,
            "timing_summary": self.timing_summary,
        }
        frames.update(self.tables)
        for name, frame in frames.items():
            path = os.path.join(out_dir, f"{self.name}_{name}.csv")
            frame.to_csv(path, index=False)
            paths.append(path)
        for name, report in self.reports.items():
            path = os.path.join(out_dir, f"{self.name}_{name}.json")
            with open(path, "w") as f:
                json.dump(report, f, indent=2)
            paths.append(path)
        path = os.path.join(out_dir, f"{self.name}_manifest.json")
        with open(path, "w") as f:
            json.dump(self.manifest, f, indent=2, default=str)
        paths.append(path)
        logger.info(f"Wrote {len(paths)} files to {out_dir}")
        return paths


class BaseExperiment:
    """
    Base class of the experiment runners.

    Subclasses set ``name``, ``default_grid`` and ``default_params`` and
    implement ``run_trial``; ``cells`` and ``summarize`` may be overridden.
    """

    name = "base"
    default_grid: Dict[str, List] = {}
    default_params: Dict[str, Any] = {}

    def grid(self, cfg: ExperimentConfig) -> Dict[str, List]:
        grid = {**self.default_grid, **cfg.grid}
        return {k: v if isinstance(v, (list, tuple)) else [v] for k, v in grid.items()}

    def param(self, cfg: ExperimentConfig, key: str):
        if key in cfg.params:
            return cfg.params[key]
        return self.default_params[key]

    def cells(self, cfg: ExperimentConfig) -> List[Dict[str, Any]]:
        """Cartesian product of the grid axes, in key order."""
        grid = self.grid(cfg)
        keys = list(grid)
        return [dict(zip(keys, values)) for values in itertools.product(*grid.values())]

    def fit_config(self, cfg: ExperimentConfig, seed: int, **overrides) -> FitConfig:
        options = {**cfg.fit, **overrides}
        options.setdefault("m_policy", cfg.m_policy)
        return FitConfig(seed=seed, **options)

    def burn_in(self, cfg: ExperimentConfig) -> float:
        return float(cfg.params.get("burn_in", DEFAULT_BURN_IN))

    def run_trial(self, cfg: ExperimentConfig, cell: Dict[str, Any], seed: int) -> Dict[str, Any]:
        """Metrics of one trial; raising ValueError or NumericalError marks it failed."""
        raise NotImplementedError("Experiment must implement run_trial method")

    def summarize(self, trials: pd.DataFrame, cfg: ExperimentConfig) -> pd.DataFrame:
        return trial_counts(trials, [k for k in trials.columns if k in self.grid(cfg)])

    def extras(self, trials: pd.DataFrame, cfg: ExperimentConfig):
        """Further (tables, reports) derived from the trials."""
        return {}, {}

    def order_trials(self, trials: pd.DataFrame) -> pd.DataFrame:
        return trials

    def run(self, cfg: ExperimentConfig) -> ExperimentResult:
        start = time.perf_counter()
        cells = self.cells(cfg)
        if not cells:
            raise ValueError(f"experiment {self.name} has an empty grid")
        logger.info(
            f"Running experiment {self.name}: {len(cells)} cells x {cfg.trials} trials, "
            f"seed {cfg.seed}, jobs {cfg.jobs}"
        )
        tasks = []
        for c, cell in enumerate(cells):
            for k, seed in enumerate(derive_seeds(cfg.seed, cfg.trials, c)):
                tasks.append((type(self), cfg, c, cell, k, seed))
        rows = run_trials(_run_trial, tasks, cfg.jobs)

        frame = pd.DataFrame(rows)
        by = [k for k in self.grid(cfg) if k in frame.columns]
        clocks = [c for c in TIMING_COLUMNS if c in frame.columns]
        timings = frame[["cell", *by, "trial", "seed", *clocks]].copy()
        trials = self.order_trials(frame.drop(columns=clocks))
        summary = self.summarize(trials, cfg)
        timing_summary = timing_stats(timings, by, clocks)
        tables, reports = self.extras(trials, cfg)
        runtime = time.perf_counter() - start
        n_failed = int((trials["status"] != "ok").sum())
        if n_failed:
            logger.warning(f"{self.name}: {n_failed} of {len(trials)} trials failed")
        logger.info(f"Experiment {self.name} done in {runtime:.1f}s")
        return ExperimentResult(
            name=self.name,
            trials=trials,
            summary=summary,
            timings=timings,
            timing_summary=timing_summary,
            tables=tables,
            reports=reports,
            manifest=build_manifest(cfg, runtime, len(trials), n_failed),
        )


def build_manifest(cfg: ExperimentConfig, runtime: float, n_trials: int, n_failed: int) -> Dict:
    from .. import __version__

    return {
        "config": cfg.to_dict(),
        "versions": {
            "noisyhawkes": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "python": platform.python_version(),
        },
        "n_trials": n_trials,
        "n_failed": n_failed,
        "runtime": runtime,
    }


def trial_counts(trials: pd.DataFrame, by: List[str]) -> pd.DataFrame:
    """Per-cell counts of succeeded and failed trials and a ``partial`` flag."""
    by = by or ["cell"]
    ok = trials["status"] == "ok"
    grouped = trials.assign(ok=ok, failed=~ok).groupby(by, sort=False, dropna=False)
    out = grouped.agg(n_ok=("ok", "sum"), n_failed=("failed", "sum")).reset_index()
    out["partial"] = out["n_failed"] > 0
    return out


def timing_stats(timings: pd.DataFrame, by: List[str], columns: Sequence[str]) -> pd.DataFrame:
    """Per-cell mean and standard deviation of the wall-clock ``columns``."""
    by = by or ["cell"]
    stats = timings.groupby(by, sort=False, dropna=False)[list(columns)].agg(["mean", "std"])
    stats.columns = [f"{col}_{stat}" for col, stat in stats.columns]
    return stats.reset_index()


def error_summary(
    trials: pd.DataFrame, by: List[str], columns: Sequence[str], prefix: Optional[str] = None
) -> pd.DataFrame:
    """Mean and standard deviation of ``columns`` over succeeded trials, with trial counts."""
    counts = trial_counts(trials, by)
    ok = trials[trials["status"] == "ok"]
    if ok.empty:
        return counts
    stats = ok.groupby(by, sort=False, dropna=False)[list(columns)].agg(["mean", "std"])
    stats.columns = [f"{prefix or ''}{col}_{stat}" for col, stat in stats.columns]
    return counts.merge(stats.reset_index(), on=by, how="left")
