"""Event-time containers."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd

from .logger import logger


@dataclass(frozen=True, eq=False)
class EventSeries:
    """
    Sorted event times of a d-dimensional point process on a window.

    Attributes:
        d: Number of components.
        window: (t_start, t_end) observation window.
        times: One strictly increasing float array per component.
    """

    d: int
    window: Tuple[float, float]
    times: Tuple[np.ndarray, ...]

    def __post_init__(self):
        t_start, t_end = (float(self.window[0]), float(self.window[1]))
        if self.d < 1:
            raise ValueError(f"d must be at least 1, got {self.d}")
        if not t_end > t_start:
            raise ValueError(f"window must satisfy t_start < t_end, got {(t_start, t_end)}")
        if len(self.times) != self.d:
            raise ValueError(f"expected {self.d} component sequences, got {len(self.times)}")

        frozen = []
        for i, comp in enumerate(self.times):
            arr = np.asarray(comp, dtype=float).reshape(-1).copy()
            if arr.size:
                if arr[0] < t_start or arr[-1] > t_end:
                    raise ValueError(f"component {i} has event times outside window {t_start, t_end}")
                if np.any(np.diff(arr) <= 0):
                    raise ValueError(f"component {i} event times must be strictly increasing")
            arr.setflags(write=False)
            frozen.append(arr)

        object.__setattr__(self, "window", (t_start, t_end))
        object.__setattr__(self, "times", tuple(frozen))

    @classmethod
    def empty(cls, d: int, window: Tuple[float, float]) -> "EventSeries":
        return cls(d=d, window=window, times=tuple(np.empty(0) for _ in range(d)))

    @property
    def horizon(self) -> float:
        return self.window[1] - self.window[0]

    @property
    def counts(self) -> np.ndarray:
        return np.array([comp.size for comp in self.times], dtype=int)

    @property
    def n_events(self) -> int:
        return int(self.counts.sum())

    def is_empty(self) -> bool:
        return self.n_events == 0

    def empirical_rates(self) -> np.ndarray:
        return self.counts / self.horizon

    def shifted(self, offset: float) -> "EventSeries":
        """Translate every time (and the window) by ``offset``."""
        return EventSeries(
            d=self.d,
            window=(self.window[0] + offset, self.window[1] + offset),
            times=tuple(comp + offset for comp in self.times),
        )

    def scaled(self, factor: float) -> "EventSeries":
        """Rescale the time axis by ``factor`` > 0."""
        if factor <= 0:
            raise ValueError(f"factor must be positive, got {factor}")
        return EventSeries(
            d=self.d,
            window=(self.window[0] * factor, self.window[1] * factor),
            times=tuple(comp * factor for comp in self.times),
        )

    def restrict(self, t_start: float, t_end: float, closed_right: bool = False) -> "EventSeries":
        """Events in [t_start, t_end) (or [t_start, t_end]) on the narrower window."""
        parts = []
        for comp in self.times:
            lo = np.searchsorted(comp, t_start, side="left")
            hi = np.searchsorted(comp, t_end, side="right" if closed_right else "left")
            parts.append(comp[lo:hi])
        return EventSeries(d=self.d, window=(t_start, t_end), times=tuple(parts))

    def to_frame(self) -> pd.DataFrame:
        """Long-format table (component, time) sorted by time then component."""
        frames: List[pd.DataFrame] = [
            pd.DataFrame({"component": np.full(comp.size, i, dtype=int), "time": comp})
            for i, comp in enumerate(self.times)
        ]
        df = pd.concat(frames, ignore_index=True)
        return df.sort_values(["time", "component"], kind="mergesort").reset_index(drop=True)

    @classmethod
    def from_frame(cls, df: pd.DataFrame, d: int = None, window=None) -> "EventSeries":
        """
        Build a series from a (component, time) table.

        Parameters:
            df (pd.DataFrame): Table with ``component`` and ``time`` columns.
            d (int): Component count; inferred as max index + 1 when omitted.
            window (tuple): Observation window; defaults to (0, max time).
        """
        for col in ("component", "time"):
            if col not in df.columns:
                raise ValueError(f"Column '{col}' not found in DataFrame")
        components = df["component"].to_numpy(dtype=int)
        times = df["time"].to_numpy(dtype=float)
        if components.size and components.min() < 0:
            raise ValueError("component indices must be non-negative")
        if d is None:
            d = int(components.max()) + 1 if components.size else 1
        if window is None:
            t_end = float(times.max()) if times.size else 1.0
            window = (0.0, t_end if t_end > 0 else 1.0)
            logger.debug(f"No window supplied, using {window}")
        per_comp = [np.sort(times[components == i], kind="mergesort") for i in range(d)]
        return cls(d=d, window=window, times=tuple(per_comp))


def superpose(a: EventSeries, b: EventSeries) -> EventSeries:
    """
    Component-wise union of two event series on the same window.

    Parameters:
        a (EventSeries): First series.
        b (EventSeries): Second series with the same d and window.

    Returns:
        EventSeries: Merged series; origin labels are not kept.
    """
    if a.d != b.d:
        raise ValueError(f"cannot superpose series of dimension {a.d} and {b.d}")
    if a.window != b.window:
        raise ValueError(f"cannot superpose series on windows {a.window} and {b.window}")
    merged = []
    for x, y in zip(a.times, b.times):
        comp = np.concatenate([x, y])
        comp.sort(kind="mergesort")
        if comp.size > 1 and np.any(np.diff(comp) <= 0):
            logger.error("Coincident event times found while superposing")
            raise ValueError("superposed series would contain coincident event times")
        merged.append(comp)
    return EventSeries(d=a.d, window=a.window, times=tuple(merged))
