"""Command-line interface: ``noisyhawkes <command> [options]``."""

import argparse
import json
import os
import sys
from typing import List, Optional

from .config import ExperimentConfig, load_config
from .exceptions import ConfigError, NumericalError
from .identifiability import PROBE_MODELS, equivalence_witnesses, injectivity_probe
from .logger import logger, set_verbosity
from .params import NoisyHawkesParams
from .simulation import DEFAULT_BURN_IN, SimulationConfig, simulate_noisy_hawkes
from .spectral import periodogram
from .storage import (
    read_events_csv,
    store_replicates_in_hdf,
    write_events_csv,
    write_fit_json,
    write_json,
    write_periodogram_csv,
    write_support_report,
)
from .support import SupportConfig, three_step_fit
from .utils import derive_seeds
from .whittle import FitConfig, ModelSpec, fit, frequency_count

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _read_json(path: str):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _load_params(path: str) -> NoisyHawkesParams:
    return NoisyHawkesParams.from_dict(_read_json(path))


def load_model(model: str, d: int) -> ModelSpec:
    """A model from a JSON spec file, or from a name such as "Q", "Q_beta"."""
    if os.path.exists(model):
        return ModelSpec.from_dict(_read_json(model))
    try:
        return ModelSpec.from_dict({"model": model, "d": d})
    except ValueError as exc:
        raise ConfigError(f"--model is neither a file nor a known model: {model}") from exc


def _m_policy(value: str):
    if value in ("n", "nlogn", "n_log_n") or value.isdigit():
        return value
    raise argparse.ArgumentTypeError(f"M policy must be 'n', 'nlogn' or an integer, got {value}")


def _output(data, out: Optional[str]):
    if out:
        write_json(data, out)
    else:
        print(json.dumps(data, indent=2))


def cmd_simulate(args) -> int:
    if args.params:
        theta = _load_params(args.params)
    else:
        theta = NoisyHawkesParams.univariate(args.mu, args.alpha, args.beta, args.lambda0)
    seeds = derive_seeds(args.seed, args.replicates)
    replicates = [
        simulate_noisy_hawkes(theta, SimulationConfig(args.horizon, args.burn_in, seed))
        for seed in seeds
    ]
    if args.hdf:
        store_replicates_in_hdf(replicates, args.batch, args.hdf, seed=args.seed)
    out = args.out or "events.csv"
    if len(replicates) == 1:
        write_events_csv(replicates[0], out, seed=seeds[0], params=theta)
    else:
        root, ext = os.path.splitext(out)
        for k, (events, seed) in enumerate(zip(replicates, seeds)):
            write_events_csv(events, f"{root}_{k:03d}{ext or '.csv'}", seed=seed, params=theta)
    return EXIT_OK


def cmd_periodogram(args) -> int:
    events = read_events_csv(args.events)
    M = frequency_count(args.M_policy, events)
    pg = periodogram(events, M, method=args.method)
    write_periodogram_csv(pg, args.out or "periodogram.csv")
    return EXIT_OK


def _fit_config(args) -> FitConfig:
    return FitConfig(
        n_restarts=args.restarts,
        m_policy=args.M_policy,
        seed=args.seed,
        periodogram_method=args.method,
    )


def cmd_fit(args) -> int:
    replicates = [read_events_csv(path) for path in args.events]
    spec = load_model(args.model, replicates[0].d)
    result = fit(spec, replicates if len(replicates) > 1 else replicates[0], _fit_config(args))
    if args.out:
        write_fit_json(result, args.out, verbose=args.verbose > 0)
    else:
        print(json.dumps(result.to_dict(verbose=args.verbose > 0), indent=2))
    return EXIT_OK


def cmd_equivalence(args) -> int:
    if args.probe:
        report = injectivity_probe(args.probe, n_pairs=args.pairs, seed=args.seed, mode=args.mode)
        _output(report.to_dict(verbose=args.verbose > 0), args.out)
        return EXIT_OK
    if not args.params:
        raise ConfigError("equivalence needs --params or --probe")
    theta = _load_params(args.params)
    witnesses = equivalence_witnesses(theta, n=args.n, seed=args.seed)
    _output({"theta": theta.to_dict(), "witnesses": witnesses}, args.out)
    return EXIT_OK


def cmd_support(args) -> int:
    replicates = [read_events_csv(path) for path in args.events]
    if len(replicates) == 1 and args.n_parts is None:
        raise ConfigError("a single event file needs --n-parts")
    cfg = SupportConfig(
        quantile_level=args.quantile,
        null_threshold=args.threshold,
        rule=args.rule,
        correction=args.correction,
        n_parts=args.n_parts if len(replicates) == 1 else None,
        jobs=args.jobs,
        fit=_fit_config(args),
    )
    report, refit = three_step_fit(replicates[0] if len(replicates) == 1 else replicates, cfg)
    out = args.out or "support.json"
    write_support_report(report, out)
    if refit is not None:
        root, _ = os.path.splitext(out)
        write_fit_json(refit, f"{root}_refit.json", verbose=args.verbose > 0)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .experiments import list_available_experiments, run_experiment

    if args.id not in list_available_experiments():
        raise ConfigError(
            f"Unknown experiment: {args.id}. Available experiments: {list_available_experiments()}"
        )
    cfg = load_config(args.config, args.id) if args.config else ExperimentConfig(experiment=args.id)
    cfg = cfg.with_overrides(
        seed=args.seed,
        jobs=args.jobs,
        out=args.out,
        trials=args.trials,
        m_policy=args.M_policy,
    )
    result = run_experiment(cfg)
    n_failed = int((result.trials["status"] != "ok").sum())
    print(f"{cfg.experiment}: {len(result.trials)} trials, {n_failed} failed, written to {cfg.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    common.add_argument("--seed", type=int, default=None, help="Master seed")
    common.add_argument("--out", default=None, help="Output file or directory")

    fitting = argparse.ArgumentParser(add_help=False)
    fitting.add_argument("--M-policy", dest="M_policy", type=_m_policy, default="n")
    fitting.add_argument("--restarts", type=int, default=5, help="Optimiser restarts")
    fitting.add_argument("--method", default="auto", choices=["auto", "direct", "nufft"])

    parser = argparse.ArgumentParser(
        prog="noisyhawkes",
        description="Simulate noisy Hawkes processes and estimate them by spectral likelihood",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Simulate event series")
    p.add_argument("--params", help="JSON file with mu, alpha, beta, lambda0")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--lambda0", type=float, default=0.0)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--burn-in", dest="burn_in", type=float, default=DEFAULT_BURN_IN)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--hdf", help="Also store the replicates in this HDF5 file")
    p.add_argument("--batch", default="replicates", help="HDF5 group name")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("periodogram", parents=[common], help="Periodogram of an event file")
    p.add_argument("events")
    p.add_argument("--M-policy", dest="M_policy", type=_m_policy, default="n")
    p.add_argument("--method", default="auto", choices=["auto", "direct", "nufft"])
    p.set_defaults(func=cmd_periodogram)

    p = sub.add_parser("fit", parents=[common, fitting], help="Spectral likelihood fit")
    p.add_argument("events", nargs="+", help="One event file, or replicates fitted jointly")
    p.add_argument("--model", required=True, help="Model spec file or model name")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("equivalence", parents=[common], help="Identifiability witnesses")
    p.add_argument("--params", help="JSON parameter file to build equivalent tuples for")
    p.add_argument("--n", type=int, default=5, help="Number of witnesses")
    p.add_argument("--probe", choices=list(PROBE_MODELS), help="Run the injectivity probe")
    p.add_argument("--pairs", type=int, default=500)
    p.add_argument("--mode", default="random", choices=["random", "equivalent"])
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("support", parents=[common, fitting], help="Three-step support detection")
    p.add_argument("events", nargs="+", help="One event file (with --n-parts) or replicates")
    p.add_argument("--n-parts", dest="n_parts", type=int, default=None)
    p.add_argument("--quantile", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--rule", default="quantile", choices=["quantile", "null_proportion"])
    p.add_argument("--correction", default=None, choices=["bonferroni", "bh"])
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_support)

    p = sub.add_parser("experiment", parents=[common], help="Run a registered experiment")
    p.add_argument("id", help="Experiment id")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--M-policy", dest="M_policy", type=_m_policy, default=None)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_verbosity(args.verbose)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        logger.error(str(exc))
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error(f"Numerical failure: {exc}")
        return EXIT_NUMERICAL
    except ValueError as exc:
        logger.error(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
