"""Agreement and error metrics scored at ground-truth cells."""

import logging
from enum import Enum
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel

from core import GapDynError, SeriesMatrix, Space, as_cell_array

logger = logging.getLogger(__name__)


class DegenerateObserved(GapDynError):
    """Index of agreement is undefined (zero denominator)."""
    pass


class TruthMissing(GapDynError):
    """A scored cell is not observed in the truth series."""
    pass


def _pair(observed, predicted) -> tuple:
    o = np.asarray(observed, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if o.shape != p.shape or o.size == 0:
        raise ValueError(f"Need equal nonzero lengths, got {o.size} and {p.size}")
    return o, p


def ioa(observed, predicted) -> float:
    """Willmott's index of agreement.

    d = 1 - sum((O - P)^2) / sum((|P - mean(O)| + |O - mean(O)|)^2)

    Raises:
        DegenerateObserved: If the denominator is zero
    """
    o, p = _pair(observed, predicted)
    o_bar = o.mean()
    denominator = float(np.sum((np.abs(p - o_bar) + np.abs(o - o_bar)) ** 2))
    if denominator == 0.0:
        raise DegenerateObserved("Index of agreement undefined: observed and predicted all equal the observed mean")
    return 1.0 - float(np.sum((o - p) ** 2)) / denominator


def rmse(observed, predicted) -> float:
    o, p = _pair(observed, predicted)
    return float(np.sqrt(np.mean((o - p) ** 2)))


class ScoreStatus(str, Enum):
    OK = "ok"
    UNSCORABLE = "unscorable"


class ScoreEntry(BaseModel):
    """Score over one scope (a station or the pooled union)."""

    status: ScoreStatus = ScoreStatus.OK
    ioa: Optional[float] = None
    rmse: Optional[float] = None
    n_cells: int = 0


class CellScores(BaseModel):
    pooled: ScoreEntry
    stations: Dict[str, ScoreEntry]


def _score(o: np.ndarray, p: np.ndarray) -> ScoreEntry:
    if o.size == 0:
        return ScoreEntry(status=ScoreStatus.UNSCORABLE, n_cells=0)
    error = rmse(o, p)
    # Constant truth leaves nothing to agree with
    if o.size < 2 or np.ptp(o) == 0.0:
        return ScoreEntry(status=ScoreStatus.UNSCORABLE, rmse=error, n_cells=int(o.size))
    return ScoreEntry(ioa=ioa(o, p), rmse=error, n_cells=int(o.size))


def score_at_cells(truth: SeriesMatrix, estimate: SeriesMatrix, cells) -> CellScores:
    """Per-station and pooled IOA/RMSE over the given (row, station) cells.

    The pooled score is computed over the union of cells of scorable stations;
    stations with fewer than two cells or identical truth values are Unscorable
    and left out of the pool.

    Raises:
        TruthMissing: If a cell is masked in ``truth``
    """
    if truth.space != Space.RAW or estimate.space != Space.RAW:
        logger.warning("Scoring expects raw-space series")
    if truth.shape != estimate.shape:
        raise ValueError(f"Truth {truth.shape} and estimate {estimate.shape} differ in shape")

    cells = as_cell_array(cells)
    rows, cols = cells[:, 0], cells[:, 1]
    if not truth.mask[rows, cols].all():
        row, col = cells[~truth.mask[rows, cols]][0]
        raise TruthMissing(f"Cell ({row}, {truth.station_ids[col]}) is not observed in truth")

    o = truth.values[rows, cols]
    p = estimate.values[rows, cols]

    stations = {}
    pooled = np.zeros(len(cells), dtype=bool)
    for j, station_id in enumerate(truth.station_ids):
        selected = cols == j
        entry = _score(o[selected], p[selected])
        stations[station_id] = entry
        if entry.status == ScoreStatus.OK:
            pooled |= selected

    return CellScores(pooled=_score(o[pooled], p[pooled]), stations=stations)
