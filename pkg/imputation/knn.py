"""Row-wise k-nearest-neighbour imputation with a missing-aware distance.

Neighbours are time points (rows). The distance between two rows uses only
the stations observed in both, scaled by S/|C| to compensate for the
stations left out.
"""

import logging
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from core import SeriesMatrix, Space
from .soft_impute import NoObservedData

logger = logging.getLogger(__name__)


class KnnFallback(str, Enum):
    """Value used when a cell has no comparable neighbour."""

    COLUMN_MEAN = "column_mean"


class KnnConfig(BaseModel):
    k: int = Field(5, ge=1)
    fallback: KnnFallback = KnnFallback.COLUMN_MEAN


def masked_distance(a, b, mask_a, mask_b) -> Optional[float]:
    """Scaled Euclidean distance over co-observed entries.

    Returns None (incomparable) when the rows share no observed entry.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    common = np.asarray(mask_a, dtype=bool) & np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"Rows differ in width: {a.shape} vs {b.shape}")
    n_common = int(common.sum())
    if n_common == 0:
        return None
    diff = a[common] - b[common]
    return float(np.sqrt(a.size / n_common * np.sum(diff ** 2)))


def _row_distances(x: np.ndarray, mask: np.ndarray, t: int) -> np.ndarray:
    """Distances from row t to every row; inf for incomparable rows and for t itself."""
    common = mask & mask[t]
    n_common = common.sum(axis=1)
    squared = np.sum(np.where(common, (x - x[t]) ** 2, 0.0), axis=1)
    distances = np.full(x.shape[0], np.inf)
    comparable = n_common > 0
    distances[comparable] = np.sqrt(x.shape[1] / n_common[comparable] * squared[comparable])
    distances[t] = np.inf
    return distances


def _nearest(candidates: np.ndarray, distances: np.ndarray, t: int, k: int) -> np.ndarray:
    """k candidates by (distance, |t' - t|, t')."""
    if len(candidates) > k:
        kth = np.partition(distances, k - 1)[k - 1]
        within = distances <= kth
        candidates, distances = candidates[within], distances[within]
    order = np.lexsort((candidates, np.abs(candidates - t), distances))
    return candidates[order[:k]]


def knn_impute(m: SeriesMatrix, cfg: KnnConfig) -> SeriesMatrix:
    """Fill each masked cell with the unweighted mean of its k nearest rows.

    Candidates for cell (t, s) are the other rows with station s observed and
    a comparable distance to row t. Neighbours come from observed cells only,
    so imputations never feed each other. With no candidate, the station's
    observed mean is used.

    Raises:
        NoObservedData: If a station has no observed cells
    """
    if m.space != Space.NORMALIZED:
        logger.warning(f"KNN impute on a {m.space.value} series; normalized input is expected")
    empty = [s for j, s in enumerate(m.station_ids) if not m.mask[:, j].any()]
    if empty or m.n_rows == 0:
        raise NoObservedData(f"Stations without observations: {empty}")

    x = np.where(m.mask, m.values, 0.0)
    fallback = np.nanmean(np.where(m.mask, m.values, np.nan), axis=0)
    filled = x.copy()

    incomplete_rows = np.flatnonzero(~m.mask.all(axis=1))
    fallbacks = 0
    for t in incomplete_rows:
        distances = _row_distances(x, m.mask, t)
        comparable = np.isfinite(distances)
        for s in np.flatnonzero(~m.mask[t]):
            candidates = np.flatnonzero(m.mask[:, s] & comparable)
            if len(candidates) == 0:
                filled[t, s] = fallback[s]
                fallbacks += 1
                continue
            neighbours = _nearest(candidates, distances[candidates], t, cfg.k)
            filled[t, s] = x[neighbours, s].mean()

    logger.debug(f"KNN filled {int((~m.mask).sum())} cells over {len(incomplete_rows)} rows "
                 f"(k={cfg.k}, {fallbacks} fallbacks)")
    return m.with_values(filled, mask=np.ones(m.shape, dtype=bool))
