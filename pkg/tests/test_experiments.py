"""Tests for the experiment registry and small runs of every experiment."""

import os

import numpy as np
import pandas as pd
import pytest

from noisyhawkes import ExperimentConfig, get_experiment, list_available_experiments, run_experiment
from noisyhawkes.experiments import BaseExperiment, register_experiment
from noisyhawkes.experiments.spike_slab import (
    accuracy_curve,
    baselines_accepted,
    sample_spike_slab_params,
    truncate_interactions,
)

FAST_FIT = {"n_restarts": 2, "periodogram_method": "direct"}


class HalfFailing(BaseExperiment):
    """Trials of the cell x = 2 always fail."""

    name = "half_failing"
    default_grid = {"x": [1, 2]}

    def run_trial(self, cfg, cell, seed):
        if cell["x"] == 2:
            raise ValueError("boom")
        return {"value": float(seed % 7)}


def _result_files(out_dir):
    """Contents of the written result tables and reports, skipping wall-clock files."""
    return {
        path.name: path.read_bytes()
        for path in sorted(out_dir.iterdir())
        if path.suffix in (".csv", ".json")
        and "timing" not in path.name
        and "manifest" not in path.name
    }


@pytest.fixture
def registry(monkeypatch):
    import noisyhawkes.experiments.api as api

    monkeypatch.setattr(api, "_EXPERIMENT_REGISTRY", dict(api._EXPERIMENT_REGISTRY))
    return api._EXPERIMENT_REGISTRY


def test_registry(registry):
    assert set(list_available_experiments()) >= {"univariate", "compensation", "bivariate", "spike_slab"}

    with pytest.raises(ValueError) as excinfo:
        get_experiment("nope")
    assert "Unknown experiment" in str(excinfo.value)

    with pytest.raises(ValueError) as excinfo:
        register_experiment("plain", dict)
    assert "BaseExperiment" in str(excinfo.value)

    register_experiment("half_failing", HalfFailing)
    assert get_experiment("half_failing") is HalfFailing


def test_failed_trials_are_recorded(registry):
    """A failing trial becomes a row with status "failed" and does not stop the run."""
    register_experiment("half_failing", HalfFailing)
    cfg = ExperimentConfig(experiment="half_failing", trials=2, seed=1)
    result = run_experiment(cfg, out="")

    trials = result.trials
    assert len(trials) == 4
    assert trials["status"].tolist() == ["ok", "ok", "failed", "failed"]
    assert (trials.loc[trials["status"] == "failed", "error"] == "boom").all()
    assert "runtime" not in trials.columns
    assert list(result.timings.columns) == ["cell", "x", "trial", "seed", "runtime"]
    assert list(result.timing_summary.columns) == ["x", "runtime_mean", "runtime_std"]

    summary = result.summary.set_index("x")
    assert summary.loc[1, "n_ok"] == 2
    assert bool(summary.loc[2, "partial"])
    assert result.manifest["n_failed"] == 2


def test_univariate_sweep_is_deterministic(tmp_path):
    cfg = ExperimentConfig(
        experiment="univariate",
        grid={"model": ["Q_beta"], "horizon": [200]},
        trials=2,
        seed=0,
        m_policy=300,
        fit=FAST_FIT,
        out=str(tmp_path / "a"),
    )
    first = run_experiment(cfg)
    run_experiment(cfg.with_overrides(out=str(tmp_path / "b")))

    files_a = _result_files(tmp_path / "a")
    files_b = _result_files(tmp_path / "b")
    assert set(files_a) == {"univariate_trials.csv", "univariate_summary.csv"}
    assert files_a == files_b

    assert (first.trials["status"] == "ok").all()
    assert (first.trials["M_used"] == 300).all()
    assert (first.trials["beta_hat"] == 1.0).all()
    assert "rel_error_mean" in first.summary.columns
    for name in ("trials", "summary", "timings", "timing_summary", "manifest"):
        ext = "json" if name == "manifest" else "csv"
        assert os.path.exists(str(tmp_path / "a" / f"univariate_{name}.{ext}"))


def test_univariate_sweep_reports_fit_runtime_per_cell():
    cfg = ExperimentConfig(
        experiment="univariate",
        grid={"model": ["Q_beta", "Q_mu"], "horizon": [200]},
        trials=2,
        seed=0,
        m_policy=200,
        fit=FAST_FIT,
    )
    result = run_experiment(cfg, out="")
    assert "fit_runtime" not in result.trials.columns
    assert (result.timings["fit_runtime"] > 0).all()

    timing = result.timing_summary
    assert list(timing.columns[:3]) == ["model", "horizon", "m_policy"]
    assert timing["model"].tolist() == ["Q_beta", "Q_mu"]
    assert (timing["fit_runtime_mean"] > 0).all()
    assert (timing["fit_runtime_std"] >= 0).all()
    # a fit is part of a trial
    assert (timing["fit_runtime_mean"] <= timing["runtime_mean"]).all()

    joined = result.summary_with_timings()
    assert len(joined) == len(result.summary)
    assert {"rel_error_mean", "fit_runtime_mean", "fit_runtime_std"} <= set(joined.columns)


def test_univariate_noise_ratio_axis():
    cfg = ExperimentConfig(
        experiment="univariate",
        grid={"model": ["Q_lambda0"], "horizon": [200], "noise_ratio": [0.5]},
        trials=1,
        m_policy=200,
        fit=FAST_FIT,
    )
    result = run_experiment(cfg, out="")
    # m^H = 1 / (1 - 0.5) = 2
    assert result.trials["lambda0_true"].tolist() == [1.0]


def test_compensation_study():
    cfg = ExperimentConfig(
        experiment="compensation",
        grid={"fixed": ["beta"], "horizon": [300]},
        trials=3,
        m_policy=300,
        fit=FAST_FIT,
    )
    result = run_experiment(cfg, out="")
    ok = result.trials[result.trials["status"] == "ok"]
    assert ok["mu_hat"].is_monotonic_increasing
    assert {"corr_mu_alpha", "corr_mu_lambda0", "mN_true"} <= set(result.summary.columns)
    assert ok["mN_true"].iloc[0] == pytest.approx(3.2)


def test_bivariate_alpha21_study():
    cfg = ExperimentConfig(
        experiment="bivariate",
        grid={"study": ["alpha21"]},
        params={"alpha21": [0.4], "alpha21_horizons": [300]},
        trials=2,
        m_policy=200,
        fit=FAST_FIT,
    )
    result = run_experiment(cfg, out="")
    assert len(result.trials) == 2
    assert "err_alpha[1,0]" in result.trials.columns
    assert "err_alpha[1,0]_mean" in result.summary.columns


def test_bivariate_scenarios_support_table(tmp_path):
    cfg = ExperimentConfig(
        experiment="bivariate",
        grid={"study": ["scenarios"]},
        params={"scenarios": [2], "horizon": 300},
        trials=3,
        m_policy=200,
        seed=3,
        fit=FAST_FIT,
        out=str(tmp_path / "a"),
    )
    result = run_experiment(cfg)
    support = result.tables["support"]
    assert support["entry"].tolist() == ["alpha[0,0]", "alpha[0,1]", "alpha[1,0]", "alpha[1,1]"]
    assert (support["scenario"] == 2).all()
    assert "support_scenario_2" in result.reports

    run_experiment(cfg.with_overrides(out=str(tmp_path / "b")))
    files = _result_files(tmp_path / "a")
    assert {"bivariate_support.csv", "bivariate_support_scenario_2.json"} <= set(files)
    assert files == _result_files(tmp_path / "b")


def test_bivariate_rejects_unknown_study():
    cfg = ExperimentConfig(experiment="bivariate", grid={"study": ["bootstrap"]}, trials=1)
    with pytest.raises(ValueError) as excinfo:
        run_experiment(cfg, out="")
    assert "Unknown study" in str(excinfo.value)


def test_spike_slab_draws():
    for seed in range(20):
        theta = sample_spike_slab_params(seed)
        assert theta.is_stationary()
        nonzero = theta.alpha[theta.alpha > 0]
        assert np.all(nonzero >= 0.1)
        assert baselines_accepted(theta.mu)
        assert np.all(theta.beta >= 0.5)
        assert theta.lambda0 >= 0.1

    assert sample_spike_slab_params(3).allclose(sample_spike_slab_params(3), rtol=0.0)


def test_truncate_and_ratio_filter():
    alpha = truncate_interactions([[0.05, 0.2], [0.1, 0.0]])
    assert alpha.tolist() == [[0.0, 0.2], [0.1, 0.0]]
    assert not baselines_accepted([3.0, 1.0])
    assert baselines_accepted([1.0, 1.5])


def test_accuracy_curve():
    trials = pd.DataFrame(
        {
            "status": ["ok", "ok", "ok", "failed"],
            "lambda0": [0.3, 1.2, 4.0, 0.2],
            "correct": [True, False, True, False],
        }
    )
    curve = accuracy_curve(trials, [0.5, 2.0])
    assert curve["n"].tolist() == [1, 2, 3]
    assert curve["accuracy"].tolist()[:2] == [1.0, 0.5]
    assert curve["accuracy"].iloc[2] == pytest.approx(2 / 3)
    assert np.isinf(curve["lambda_max"].iloc[2])


@pytest.mark.slow
def test_spike_slab_study_runs():
    cfg = ExperimentConfig(
        experiment="spike_slab",
        params={"target_events": 2000, "n_parts": 6},
        trials=2,
        m_policy=300,
        fit=FAST_FIT,
    )
    result = run_experiment(cfg, out="")
    assert len(result.trials) == 2
    assert list(result.tables["accuracy"]["lambda_max"])[-1] == np.inf
