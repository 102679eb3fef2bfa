"""Reading and writing event series, periodograms, fits and support reports."""

import json
import os
from typing import Dict, List, Optional

import h5py
import numpy as np
import pandas as pd

from .events import EventSeries
from .logger import logger
from .params import NoisyHawkesParams
from .spectral import Periodogram
from .support import SupportReport
from .whittle import FitResult


def _ensure_parent(path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def sidecar_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".json"


def write_events_csv(
    events: EventSeries,
    path: str,
    seed: Optional[int] = None,
    params: Optional[NoisyHawkesParams] = None,
) -> str:
    """
    Write events as a (component, time) CSV plus a JSON sidecar.

    The sidecar holds ``d``, ``window`` and, when given, the seed and the
    parameters the series was simulated from. Returns the sidecar path.
    """
    _ensure_parent(path)
    events.to_frame().to_csv(path, index=False)
    meta = {
        "d": events.d,
        "window": list(events.window),
        "seed": seed,
        "params": params.to_dict() if params is not None else None,
    }
    meta_path = sidecar_path(path)
    with open(meta_path, "w") as f:
        json.dump(meta, f, indent=2)
    logger.info(f"Wrote {events.n_events} events to {path}")
    return meta_path


def read_events_csv(path: str, d: Optional[int] = None, window=None) -> EventSeries:
    """
    Read a (component, time) CSV.

    ``d`` and ``window`` default to the JSON sidecar when one exists, and are
    inferred from the table otherwise.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Event file not found: {path}")
    meta_path = sidecar_path(path)
    if os.path.exists(meta_path):
        with open(meta_path) as f:
            meta = json.load(f)
        d = meta.get("d", d) if d is None else d
        window = tuple(meta["window"]) if window is None and meta.get("window") else window
    df = pd.read_csv(path, float_precision="round_trip")
    return EventSeries.from_frame(df, d=d, window=window)


def read_events_meta(path: str) -> Dict:
    """The JSON sidecar of an events CSV, or an empty dict."""
    meta_path = sidecar_path(path)
    if not os.path.exists(meta_path):
        return {}
    with open(meta_path) as f:
        return json.load(f)


def store_replicates_in_hdf(
    replicates: List[EventSeries], batch: str, hdf_path: str, seed: Optional[int] = None
) -> List[str]:
    """
    Store replicate series in an HDF5 file, one group per batch.

    Each replicate becomes a subgroup ``batch/rep_XXXXX`` holding one
    gzip-compressed dataset per component and the window as attributes.

    Returns:
        List of reference strings pointing to the stored replicates.
    """
    _ensure_parent(hdf_path)
    references = []
    with h5py.File(hdf_path, "a") as f:
        group = f.require_group(batch)
        if seed is not None:
            group.attrs["seed"] = int(seed)
        for k, events in enumerate(replicates):
            name = f"rep_{k:05d}"
            if name in group:
                del group[name]  # replace
            rep = group.create_group(name)
            rep.attrs["d"] = events.d
            rep.attrs["window"] = np.asarray(events.window, dtype=float)
            for i, comp in enumerate(events.times):
                rep.create_dataset(f"c{i}", data=comp, compression="gzip", compression_opts=4)
            references.append(f"{batch}/{name}")
    logger.info(f"Stored {len(replicates)} replicates in {hdf_path}:{batch}")
    return references


def get_replicates_from_hdf(references: List[str], hdf_path: str) -> List[EventSeries]:
    """Load replicates by reference string (``batch/rep_XXXXX``)."""
    out = []
    with h5py.File(hdf_path, "r") as f:
        for ref in references:
            if not ref or "/" not in ref or ref not in f:
                raise KeyError(f"Replicate reference not found: {ref}")
            rep = f[ref]
            d = int(rep.attrs["d"])
            times = tuple(rep[f"c{i}"][:] for i in range(d))
            out.append(EventSeries(d=d, window=tuple(rep.attrs["window"]), times=times))
    return out


def list_replicates_in_hdf(hdf_path: str, batch: Optional[str] = None) -> Dict[str, List[str]]:
    """Map batch names to their replicate names."""
    if not os.path.exists(hdf_path):
        return {batch: []} if batch else {}
    result = {}
    with h5py.File(hdf_path, "r") as f:
        names = [batch] if batch else list(f.keys())
        for name in names:
            result[name] = sorted(f[name].keys()) if name in f else []
    return result


def write_periodogram_csv(pg: Periodogram, path: str):
    _ensure_parent(path)
    pg.to_frame().to_csv(path, index=False)
    logger.info(f"Wrote periodogram with M={pg.M} to {path}")


def read_periodogram_csv(path: str, horizon: float) -> Periodogram:
    return Periodogram.from_frame(pd.read_csv(path, float_precision="round_trip"), horizon)


def write_json(data: Dict, path: str):
    _ensure_parent(path)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_fit_json(result: FitResult, path: str, verbose: bool = False):
    """FitResult as JSON; restart traces and the model are included when ``verbose``."""
    write_json(result.to_dict(verbose=verbose), path)


def write_support_report(report: SupportReport, path: str):
    """Write the report as JSON, or as the per-entry table when ``path`` ends in .csv."""
    if path.endswith(".csv"):
        _ensure_parent(path)
        report.to_frame().to_csv(path, index=False)
    else:
        write_json(report.to_dict(), path)


def read_support_report(path: str) -> SupportReport:
    with open(path) as f:
        return SupportReport.from_dict(json.load(f))
