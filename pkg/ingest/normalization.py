"""Per-station z-score normalization fitted on observed cells."""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, model_validator

from core import GapDynError, SeriesMatrix, Space, TimeRange

logger = logging.getLogger(__name__)


class DegenerateStation(GapDynError):
    """A station has fewer than two observations or no spread."""
    pass


class SpaceMismatch(GapDynError):
    """A series is in the wrong value space for the requested transform."""
    pass


class StationScale(BaseModel):
    """Mean and sample standard deviation of one station (µg/m³)."""

    station_id: str
    mean: float
    std: float

    @model_validator(mode="after")
    def check_std(self) -> "StationScale":
        if not self.std > 0:
            raise ValueError(f"Station {self.station_id!r} has non-positive std {self.std}")
        return self


class NormParams(BaseModel):
    """Normalization parameters, one entry per station in series order."""

    stations: List[StationScale]
    fitted_on: Optional[TimeRange] = None

    @property
    def station_ids(self) -> tuple:
        return tuple(s.station_id for s in self.stations)

    @property
    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.stations])

    @property
    def stds(self) -> np.ndarray:
        return np.array([s.std for s in self.stations])

    def _check_covers(self, m: SeriesMatrix) -> None:
        if self.station_ids != m.station_ids:
            raise SpaceMismatch(
                f"Normalization covers stations {list(self.station_ids)}, series has {list(m.station_ids)}"
            )


def fit_normalization(m: SeriesMatrix) -> NormParams:
    """Fit per-station mean and sample std (n-1) on observed cells only.

    Raises:
        DegenerateStation: If a station has < 2 observed cells or identical values
    """
    stations = []
    for j, station_id in enumerate(m.station_ids):
        observed = m.values[m.mask[:, j], j]
        if observed.size < 2:
            raise DegenerateStation(f"Station {station_id!r} has {observed.size} observed values; need at least 2")
        std = float(np.std(observed, ddof=1))
        if not std > 0:
            raise DegenerateStation(f"Station {station_id!r} has identical observed values")
        stations.append(StationScale(station_id=station_id, mean=float(np.mean(observed)), std=std))
        logger.debug(f"Station {station_id}: mean={stations[-1].mean:.4f} std={std:.4f} n={observed.size}")

    return NormParams(stations=stations, fitted_on=m.span)


def normalize(m: SeriesMatrix, p: NormParams) -> SeriesMatrix:
    """(x - mean) / std per station; masked cells stay masked.

    Raises:
        SpaceMismatch: If m is not in raw space or stations differ
    """
    if m.space != Space.RAW:
        raise SpaceMismatch(f"normalize expects a raw series, got {m.space.value}")
    p._check_covers(m)
    values = (m.values - p.means) / p.stds
    return m.with_values(values, mask=m.mask, space=Space.NORMALIZED)


def denormalize(m: SeriesMatrix, p: NormParams) -> SeriesMatrix:
    """x * std + mean per station.

    Raises:
        SpaceMismatch: If m is not in normalized space or stations differ
    """
    if m.space != Space.NORMALIZED:
        raise SpaceMismatch(f"denormalize expects a normalized series, got {m.space.value}")
    p._check_covers(m)
    values = m.values * p.stds + p.means
    return m.with_values(values, mask=m.mask, space=Space.RAW)
