"""Report emission: JSON, flat CSV and per-level series export."""

import io
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd

from core import InjectionRecord, SeriesMatrix
from evaluation.metrics import ScoreEntry, ScoreStatus
from ingest.csv_io import format_timestamps
from .models import METHODS, ExperimentReport, ResultStatus

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["method", "level", "scope", "ioa", "rmse", "n_cells"]
SERIES_COLUMNS = ["timestamp", "station", "observed"] + [m.value for m in METHODS] + ["injected"]


class ReportFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


def _row(method: str, level: float, scope: str, entry: ScoreEntry, failed: bool) -> dict:
    scored = not failed and entry.status == ScoreStatus.OK
    return {
        "method": method,
        "level": level,
        "scope": scope,
        "ioa": entry.ioa if scored else None,
        "rmse": entry.rmse if scored else None,
        "n_cells": entry.n_cells if not failed else None,
    }


def report_rows(r: ExperimentReport) -> pd.DataFrame:
    """One row per (method, level, station or pooled), stations in report order."""
    rows = []
    for result in r.results:
        failed = result.status == ResultStatus.FAILED
        for station in r.station_ids:
            entry = result.stations.get(station, ScoreEntry())
            rows.append(_row(result.method.value, result.level, station, entry, failed))
        rows.append(_row(result.method.value, result.level, "pooled", result.pooled, failed))
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    return frame.astype({"n_cells": "Int64"})


def emit_report(r: ExperimentReport, fmt: Union[ReportFormat, str] = ReportFormat.JSON) -> bytes:
    fmt = ReportFormat(fmt)
    if fmt == ReportFormat.JSON:
        return (r.model_dump_json(indent=2, by_alias=True) + "\n").encode("utf-8")

    buffer = io.StringIO()
    report_rows(r).to_csv(buffer, index=False, float_format="%.10g", na_rep="", lineterminator="\n")
    return buffer.getvalue().encode("utf-8")


def load_report(data: Union[str, bytes]) -> ExperimentReport:
    return ExperimentReport.model_validate_json(data)


def level_label(level: float) -> str:
    """File-name label for a missing level, e.g. 0.3 -> '0.30'."""
    return f"{level:.2f}"


def series_frame(truth: SeriesMatrix, estimates: Dict[str, SeriesMatrix],
                 record: InjectionRecord) -> pd.DataFrame:
    """Long-format observed vs. estimated values for one level.

    ``observed`` carries the pre-injection truth (empty where it was never
    observed) and ``injected`` flags the cells that were scored.
    """
    n_rows, n_stations = truth.shape
    injected = np.zeros(truth.shape, dtype=bool)
    cells = record.cell_array()
    if len(cells):
        injected[cells[:, 0], cells[:, 1]] = True

    frame = pd.DataFrame({
        "timestamp": np.repeat(format_timestamps(truth.timestamps), n_stations),
        "station": np.tile(np.array(truth.station_ids, dtype=object), n_rows),
        "observed": np.where(truth.mask, truth.values, np.nan).ravel(),
    })
    for method in METHODS:
        estimate = estimates.get(method.value)
        frame[method.value] = estimate.values.ravel() if estimate is not None else np.nan
    frame["injected"] = injected.ravel().astype(int)
    return frame[SERIES_COLUMNS]


def write_series_csv(truth: SeriesMatrix, estimates: Dict[str, SeriesMatrix], record: InjectionRecord,
                     path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    series_frame(truth, estimates, record).to_csv(path, index=False, float_format="%.6g", na_rep="",
                                                  lineterminator="\n")
    logger.debug(f"Wrote series export to {path}")
    return path
