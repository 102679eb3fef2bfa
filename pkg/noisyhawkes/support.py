"""
Interaction-support detection.

The pipeline fits the full model on subsamples, screens each alpha entry
through the empirical distribution of its estimates and refits the reduced
model on all the data.
"""

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .events import EventSeries
from .exceptions import FitError, NonIdentifiableSupportWarning
from .identifiability import NON_IDENTIFIABLE_PATTERNS, classify_support
from .logger import logger
from .utils import _validate_quantile_params, derive_seeds
from .whittle import (
    NULL_THRESHOLD,
    FitConfig,
    FitResult,
    full_model,
    fit,
    support_model,
)

RULES = ("quantile", "null_proportion")
MIN_FITS = 5


@dataclass
class SupportConfig:
    """
    Settings of the support-detection pipeline.

    Attributes:
        quantile_level: Level q of the lower empirical quantile.
        null_threshold: Estimates at or below this value count as null.
        rule: "quantile" keeps an entry iff its q-quantile exceeds
            ``null_threshold``; "null_proportion" keeps it iff the share of
            null estimates is below ``null_proportion_cutoff``.
        null_proportion_cutoff: Cutoff of the "null_proportion" rule.
        correction: None, "bonferroni" or "bh" (multiple-testing correction
            over the d*d entries).
        n_parts: Number of windows a single series is partitioned into.
        min_fits: Minimum number of successful subsample fits.
        jobs: Worker processes for the subsample fits.
        refit_non_identifiable: Refit even when the detected support is a
            non-identifiable pattern.
        known_lambda0: Fix the noise level in both the full and reduced models.
        fit: Optimiser settings shared by every fit.
    """

    quantile_level: float = 0.05
    null_threshold: float = NULL_THRESHOLD
    rule: str = "quantile"
    null_proportion_cutoff: float = 0.3
    correction: Optional[str] = None
    n_parts: Optional[int] = None
    min_fits: int = MIN_FITS
    jobs: int = 1
    refit_non_identifiable: bool = False
    known_lambda0: Optional[float] = None
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        _validate_quantile_params(self.quantile_level, self.null_threshold, self.correction)
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule}")
        if not 0 < self.null_proportion_cutoff <= 1:
            raise ValueError(
                f"null_proportion_cutoff must be in (0, 1], got {self.null_proportion_cutoff}"
            )
        if self.n_parts is not None and self.n_parts < 2:
            raise ValueError(f"n_parts must be at least 2, got {self.n_parts}")
        if self.min_fits < 1:
            raise ValueError(f"min_fits must be positive, got {self.min_fits}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be positive, got {self.jobs}")


@dataclass
class SupportReport:
    """
    Outcome of the screening step.

    Attributes:
        quantiles: (d, d) lower empirical quantiles of the alpha estimates.
        null_props: (d, d) share of null estimates per entry.
        support_mask: (d, d) entries kept in the support.
        n_subsamples: Number of fits the report is built from.
        quantile_level: Level used for ``quantiles``.
        null_threshold: Null-estimate threshold.
        rule: Screening rule.
        correction: Multiple-testing correction, if any.
        failures: (subsample index, message) of the fits that were skipped.
    """

    quantiles: np.ndarray
    null_props: np.ndarray
    support_mask: np.ndarray
    n_subsamples: int
    quantile_level: float = 0.05
    null_threshold: float = NULL_THRESHOLD
    rule: str = "quantile"
    correction: Optional[str] = None
    failures: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.support_mask.shape[0]

    @property
    def pattern(self) -> str:
        return support_pattern(self.support_mask)

    def to_dict(self) -> Dict:
        return {
            "quantiles": self.quantiles.tolist(),
            "null_props": self.null_props.tolist(),
            "support_mask": self.support_mask.tolist(),
            "n_subsamples": self.n_subsamples,
            "quantile_level": self.quantile_level,
            "null_threshold": self.null_threshold,
            "rule": self.rule,
            "correction": self.correction,
            "pattern": self.pattern,
            "failures": [list(f) for f in self.failures],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SupportReport":
        return cls(
            quantiles=np.asarray(data["quantiles"], dtype=float),
            null_props=np.asarray(data["null_props"], dtype=float),
            support_mask=np.asarray(data["support_mask"], dtype=bool),
            n_subsamples=int(data["n_subsamples"]),
            quantile_level=float(data.get("quantile_level", 0.05)),
            null_threshold=float(data.get("null_threshold", NULL_THRESHOLD)),
            rule=data.get("rule", "quantile"),
            correction=data.get("correction"),
            failures=[tuple(f) for f in data.get("failures", [])],
        )

    def to_frame(self) -> pd.DataFrame:
        """One row per alpha entry: entry, quantile, null_proportion, in_support."""
        rows = []
        for i in range(self.d):
            for j in range(self.d):
                rows.append(
                    {
                        "entry": f"alpha[{i},{j}]",
                        "quantile": float(self.quantiles[i, j]),
                        "null_proportion": float(self.null_props[i, j]),
                        "in_support": bool(self.support_mask[i, j]),
                    }
                )
        return pd.DataFrame(rows)


def support_pattern(mask) -> str:
    """``classify_support`` for d = 2; "diagonal" or "unclassified" otherwise."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape == (2, 2):
        return classify_support(mask)
    off_diagonal = mask & ~np.eye(mask.shape[0], dtype=bool)
    return "diagonal" if not off_diagonal.any() else "unclassified"


def partition(events: EventSeries, n_parts: int) -> List[EventSeries]:
    """
    Split the observation window into ``n_parts`` equal windows.

    Window k covers [a_k, a_k + L) (the last one is closed on the right) and
    is re-based to start at 0. Empty parts are kept and logged.

    Parameters:
        events (EventSeries): Series to split.
        n_parts (int): Number of windows, at least 2.

    Returns:
        list of EventSeries: The parts, in time order, each on [0, L].
    """
    if not isinstance(n_parts, (int, np.integer)) or n_parts < 2:
        raise ValueError(f"n_parts must be an integer >= 2, got {n_parts}")
    t_start, t_end = events.window
    length = (t_end - t_start) / n_parts
    edges = t_start + length * np.arange(n_parts + 1)
    edges[-1] = t_end

    parts = []
    for k in range(n_parts):
        a, b = edges[k], edges[k + 1]
        comps = []
        for comp in events.times:
            lo = np.searchsorted(comp, a, side="left")
            hi = np.searchsorted(comp, b, side="right" if k == n_parts - 1 else "left")
            comps.append(np.clip(comp[lo:hi] - a, 0.0, length))
        parts.append(EventSeries(d=events.d, window=(0.0, length), times=tuple(comps)))

    empty = [k for k, p in enumerate(parts) if p.is_empty()]
    if empty:
        logger.warning(f"{len(empty)} of {n_parts} partition windows are empty: {empty}")
    logger.info(f"Partitioned window of length {t_end - t_start} into {n_parts} parts of length {length}")
    return parts


def lower_quantile(values, level: float) -> float:
    """Order statistic ceil(level * n) of ``values`` (1-indexed), no interpolation."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("need at least one value")
    k = max(math.ceil(level * x.size), 1)
    return float(x[k - 1])


def _benjamini_hochberg(p_values: np.ndarray, level: float) -> np.ndarray:
    """Entries rejected by the step-up procedure; here rejection means the entry is kept."""
    p = p_values.ravel()
    m = p.size
    order = np.argsort(p, kind="mergesort")
    passed = p[order] <= level * np.arange(1, m + 1) / m
    keep = np.zeros(m, dtype=bool)
    if passed.any():
        k = int(np.max(np.nonzero(passed)[0]))
        keep[order[: k + 1]] = True
    return keep.reshape(p_values.shape)


def detect_support(
    fits: Sequence[FitResult],
    quantile_level: float = 0.05,
    null_threshold: float = NULL_THRESHOLD,
    rule: str = "quantile",
    null_proportion_cutoff: float = 0.3,
    correction: Optional[str] = None,
    min_fits: int = MIN_FITS,
) -> SupportReport:
    """
    Screen the alpha entries of full-model fits.

    Parameters:
        fits (list of FitResult): Fits of one model on distinct subsamples.
        quantile_level (float): Level of the lower empirical quantile.
        null_threshold (float): Estimates at or below it count as null.
        rule (str): "quantile" or "null_proportion", see ``SupportConfig``.
        null_proportion_cutoff (float): Cutoff of the "null_proportion" rule.
        correction (str): None, "bonferroni" (quantile level divided by d*d)
            or "bh" (Benjamini-Hochberg with the null proportions as p-values).
        min_fits (int): Minimum number of fits.

    Returns:
        SupportReport: Quantiles, null proportions and the kept entries.
    """
    _validate_quantile_params(quantile_level, null_threshold, correction)
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule}")
    fits = list(fits)
    if len(fits) < min_fits:
        logger.error(f"Support detection needs at least {min_fits} fits, got {len(fits)}")
        raise ValueError(f"need at least {min_fits} fits, got {len(fits)}")
    status = fits[0].spec.status
    if any(f.spec.status != status for f in fits[1:]):
        raise ValueError("all fits must come from the same model")

    return screen_estimates(
        np.stack([f.theta_hat.alpha for f in fits]),
        null_mask=np.stack([f.null_alpha_mask(null_threshold) for f in fits]),
        quantile_level=quantile_level,
        null_threshold=null_threshold,
        rule=rule,
        null_proportion_cutoff=null_proportion_cutoff,
        correction=correction,
    )


def screen_estimates(
    estimates,
    null_mask=None,
    quantile_level: float = 0.05,
    null_threshold: float = NULL_THRESHOLD,
    rule: str = "quantile",
    null_proportion_cutoff: float = 0.3,
    correction: Optional[str] = None,
) -> SupportReport:
    """
    Screening step of ``detect_support`` on raw alpha estimates.

    Parameters:
        estimates: Array (n, d, d) of alpha estimates.
        null_mask: Array (n, d, d) of null flags; defaults to
            ``estimates <= null_threshold``.
    """
    _validate_quantile_params(quantile_level, null_threshold, correction)
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule}")
    estimates = np.asarray(estimates, dtype=float)
    if estimates.ndim != 3 or estimates.shape[1] != estimates.shape[2] or estimates.shape[0] == 0:
        raise ValueError(f"estimates must have shape (n, d, d), got {estimates.shape}")
    null = estimates <= null_threshold if null_mask is None else np.asarray(null_mask, dtype=bool)
    null_props = null.mean(axis=0)
    d = estimates.shape[1]

    level = quantile_level / (d * d) if correction == "bonferroni" else quantile_level
    quantiles = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            quantiles[i, j] = lower_quantile(estimates[:, i, j], level)

    if rule == "null_proportion":
        mask = null_props < null_proportion_cutoff
    elif correction == "bh":
        mask = _benjamini_hochberg(null_props, quantile_level)
    else:
        mask = quantiles > null_threshold

    logger.info(
        f"Detected support from {len(estimates)} fits (rule {rule}, level {level:.4g}): "
        f"{np.asarray(mask).astype(int).tolist()}"
    )
    return SupportReport(
        quantiles=quantiles,
        null_props=null_props,
        support_mask=np.asarray(mask, dtype=bool),
        n_subsamples=len(estimates),
        quantile_level=quantile_level,
        null_threshold=null_threshold,
        rule=rule,
        correction=correction,
    )


def _fit_subsample(args):
    index, spec, events, fit_cfg = args
    try:
        return index, fit(spec, events, fit_cfg), None
    except (FitError, ValueError) as exc:
        return index, None, str(exc)


def _subsample_fits(spec, subsamples: List[EventSeries], cfg: SupportConfig):
    seeds = (
        derive_seeds(cfg.fit.seed, len(subsamples))
        if cfg.fit.seed is not None
        else [None] * len(subsamples)
    )
    tasks = []
    failures = []
    for k, (ev, seed) in enumerate(zip(subsamples, seeds)):
        if ev.is_empty():
            logger.warning(f"Skipping empty subsample {k}")
            failures.append((k, "empty subsample"))
            continue
        tasks.append((k, spec, ev, replace(cfg.fit, seed=seed)))

    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_fit_subsample, tasks))
    else:
        outcomes = [_fit_subsample(task) for task in tasks]

    fits = []
    for k, result, message in outcomes:
        if result is None:
            logger.warning(f"Fit on subsample {k} failed: {message}")
            failures.append((k, message))
        else:
            fits.append(result)
    return fits, sorted(failures)


def _subsamples(events, cfg: SupportConfig):
    if isinstance(events, EventSeries):
        if cfg.n_parts is None:
            raise ValueError("a single series needs n_parts to be partitioned")
        return partition(events, cfg.n_parts), events
    subsamples = list(events)
    if len(subsamples) < 2:
        raise ValueError(f"need at least 2 replicates, got {len(subsamples)}")
    return subsamples, subsamples


def _screen_subsamples(subsamples: List[EventSeries], cfg: SupportConfig) -> SupportReport:
    d = subsamples[0].d
    spec = full_model(d, lambda0=cfg.known_lambda0)
    logger.info(f"Support pipeline: {len(subsamples)} subsamples, d={d}, jobs={cfg.jobs}")

    fits, failures = _subsample_fits(spec, subsamples, cfg)
    if len(fits) < cfg.min_fits:
        logger.error(f"Only {len(fits)} of {len(subsamples)} subsample fits succeeded")
        raise FitError(
            f"only {len(fits)} subsample fits succeeded, need {cfg.min_fits}",
            failures=failures,
        )

    report = detect_support(
        fits,
        quantile_level=cfg.quantile_level,
        null_threshold=cfg.null_threshold,
        rule=cfg.rule,
        null_proportion_cutoff=cfg.null_proportion_cutoff,
        correction=cfg.correction,
        min_fits=cfg.min_fits,
    )
    report.failures = failures
    return report


def subsample_support(events, cfg: Optional[SupportConfig] = None) -> SupportReport:
    """
    First two steps of ``three_step_fit``: full-model fits on every subsample and screening.

    Raises:
        FitError: If fewer than ``cfg.min_fits`` subsample fits succeed;
            ``failures`` lists the subsamples that failed.
    """
    cfg = cfg or SupportConfig()
    subsamples, _ = _subsamples(events, cfg)
    return _screen_subsamples(subsamples, cfg)


def three_step_fit(
    events, cfg: Optional[SupportConfig] = None
) -> Tuple[SupportReport, Optional[FitResult]]:
    """
    Full-model fits on subsamples, screening, then a reduced-model refit.

    Parameters:
        events: A list of at least two replicate EventSeries, or a single
            EventSeries together with ``cfg.n_parts``. Replicates are refitted
            jointly; a partitioned series is refitted whole.
        cfg (SupportConfig): Pipeline settings.

    Returns:
        tuple: The SupportReport and the reduced-model FitResult, which is
        None when the detected support is non-identifiable and
        ``cfg.refit_non_identifiable`` is off.

    Raises:
        FitError: If fewer than ``cfg.min_fits`` subsample fits succeed.
    """
    cfg = cfg or SupportConfig()
    subsamples, full_data = _subsamples(events, cfg)
    report = _screen_subsamples(subsamples, cfg)

    pattern = report.pattern
    if pattern in NON_IDENTIFIABLE_PATTERNS:
        message = (
            f"detected support {report.support_mask.astype(int).tolist()} is {pattern}, "
            f"not identifiable"
        )
        logger.warning(message)
        warnings.warn(
            NonIdentifiableSupportWarning(
                message, support_mask=report.support_mask.tolist(), pattern=pattern
            ),
            stacklevel=2,
        )
        if not cfg.refit_non_identifiable:
            return report, None

    reduced = support_model(report.support_mask, lambda0=cfg.known_lambda0, name="Q_reduced")
    refit = fit(reduced, full_data, cfg.fit)
    return report, refit
