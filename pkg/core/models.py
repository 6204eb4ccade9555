"""Data models for masked multivariate hourly series."""

import logging
from enum import Enum
from typing import Any, Iterable, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class GapDynError(Exception):
    """Base error for every failure raised by gapdyn modules."""

    @property
    def code(self) -> str:
        return type(self).__name__


class EmptyRange(GapDynError):
    """No row of the series falls inside the requested range."""
    pass


class ShapeError(GapDynError):
    """A series matrix violates its shape or cadence invariants."""
    pass


class Space(str, Enum):
    """Value space of a series matrix."""

    RAW = "raw"
    NORMALIZED = "normalized"


class TimeRange(BaseModel):
    """Half-open range of epoch hours, [start, end)."""

    start: int
    end: int

    @model_validator(mode="after")
    def check_order(self) -> "TimeRange":
        if self.end <= self.start:
            raise ValueError(f"Time range end ({self.end}) must be after start ({self.start})")
        return self

    def __len__(self) -> int:
        return self.end - self.start

    def contains(self, hour: int) -> bool:
        return self.start <= hour < self.end

    def overlaps(self, other: "TimeRange") -> bool:
        return self.start < other.end and other.start < self.end

    @classmethod
    def hull(cls, a: "TimeRange", b: "TimeRange") -> "TimeRange":
        """Smallest range covering both a and b (including any gap between them)."""
        return cls(start=min(a.start, b.start), end=max(a.end, b.end))


class SeriesMatrix(BaseModel):
    """T x S matrix of hourly values with an authoritative observation mask.

    Missing cells hold NaN in ``values`` and False in ``mask``. Instances are
    immutable; every operation returns a new matrix.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    timestamps: np.ndarray  # epoch hours, int64
    values: np.ndarray
    mask: np.ndarray
    station_ids: Tuple[str, ...]
    space: Space = Space.RAW

    @field_validator("station_ids", mode="before")
    @classmethod
    def coerce_station_ids(cls, station_ids: Any) -> Tuple[str, ...]:
        return tuple(str(s) for s in station_ids)

    @model_validator(mode="before")
    @classmethod
    def coerce_arrays(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        try:
            timestamps = np.array(data.get("timestamps", []), dtype=np.int64).reshape(-1)
            values = np.array(data.get("values", []), dtype=np.float64)
            mask = data.get("mask")
            if mask is None:
                mask = ~np.isnan(values)
            mask = np.array(mask, dtype=bool)
        except (TypeError, ValueError) as e:
            raise ShapeError(f"Series arrays could not be coerced: {e}")

        n_stations = len(data.get("station_ids", ()))
        if values.size == 0 and values.ndim < 2:
            values = values.reshape(len(timestamps), n_stations)
        if mask.size == 0 and mask.ndim < 2:
            mask = mask.reshape(len(timestamps), n_stations)

        if values.ndim != 2 or mask.shape != values.shape:
            raise ShapeError(f"values {values.shape} and mask {mask.shape} must share a 2-D shape")
        if values.shape[0] != len(timestamps):
            raise ShapeError(f"{values.shape[0]} value rows but {len(timestamps)} timestamps")
        if values.shape[1] != n_stations:
            raise ShapeError(f"{values.shape[1]} value columns but {n_stations} station ids")
        if len(timestamps) > 1 and not np.all(np.diff(timestamps) == 1):
            raise ShapeError("Timestamps must be strictly increasing with a constant 1-hour step")
        if np.any(mask & ~np.isfinite(values)):
            raise ShapeError("Observed cells must hold finite values")

        values[~mask] = np.nan
        for arr in (timestamps, values, mask):
            arr.flags.writeable = False

        data.update(timestamps=timestamps, values=values, mask=mask)
        return data

    @model_validator(mode="after")
    def check_station_ids(self) -> "SeriesMatrix":
        if len(set(self.station_ids)) != len(self.station_ids):
            raise ShapeError(f"Station ids must be unique: {list(self.station_ids)}")
        return self

    def __eq__(self, other: Any) -> bool:
        """Equal when stations, space, timestamps, mask and observed values match exactly."""
        if not isinstance(other, SeriesMatrix):
            return False
        return (
                self.station_ids == other.station_ids and
                self.space == other.space and
                np.array_equal(self.timestamps, other.timestamps) and
                np.array_equal(self.mask, other.mask) and
                np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_stations(self) -> int:
        return self.values.shape[1]

    @property
    def span(self) -> Optional[TimeRange]:
        if self.n_rows == 0:
            return None
        return TimeRange(start=int(self.timestamps[0]), end=int(self.timestamps[-1]) + 1)

    @property
    def is_complete(self) -> bool:
        return bool(self.mask.all())

    def observed_fraction(self) -> float:
        """Share of cells that are observed (0.0 for an empty matrix)."""
        if self.values.size == 0:
            return 0.0
        return float(self.mask.sum()) / float(self.values.size)

    def observed_count(self) -> int:
        return int(self.mask.sum())

    def restrict(self, rows: TimeRange) -> "SeriesMatrix":
        """Rows whose timestamps fall inside ``rows``.

        Raises:
            EmptyRange: If no row falls inside the range
        """
        keep = (self.timestamps >= rows.start) & (self.timestamps < rows.end)
        if not keep.any():
            raise EmptyRange(f"No rows in [{rows.start}, {rows.end}); series spans {self.span}")
        return SeriesMatrix(
            timestamps=self.timestamps[keep],
            values=self.values[keep],
            mask=self.mask[keep],
            station_ids=self.station_ids,
            space=self.space,
        )

    def row_index(self, hour: int) -> int:
        if self.n_rows == 0 or not (self.timestamps[0] <= hour <= self.timestamps[-1]):
            raise EmptyRange(f"Hour {hour} outside series span {self.span}")
        return int(hour - self.timestamps[0])

    def with_values(self, values: np.ndarray, mask: Optional[np.ndarray] = None,
                    space: Optional[Space] = None) -> "SeriesMatrix":
        """New matrix with replaced values (and optionally mask / space)."""
        values = np.asarray(values, dtype=np.float64)
        if mask is None:
            mask = ~np.isnan(values)
        return SeriesMatrix(
            timestamps=self.timestamps,
            values=values,
            mask=mask,
            station_ids=self.station_ids,
            space=space if space is not None else self.space,
        )

    def mask_cells(self, cells: Union[np.ndarray, Iterable[Tuple[int, int]]]) -> "SeriesMatrix":
        """New matrix with the listed (row, station) cells masked."""
        cells = as_cell_array(cells)
        mask = self.mask.copy()
        mask[cells[:, 0], cells[:, 1]] = False
        return self.with_values(self.values.copy(), mask=mask)

    def missing_cells(self, rows: Optional[Tuple[int, int]] = None) -> np.ndarray:
        """(row, station) pairs of masked cells, row-major, optionally limited to rows [lo, hi)."""
        cells = np.argwhere(~self.mask)
        if rows is not None:
            lo, hi = rows
            cells = cells[(cells[:, 0] >= lo) & (cells[:, 0] < hi)]
        return cells.astype(np.int64)

    def station_index(self, station_id: str) -> int:
        return self.station_ids.index(station_id)


def as_cell_array(cells: Union[np.ndarray, Iterable[Tuple[int, int]]]) -> np.ndarray:
    """Normalize any (row, station) collection to an (n, 2) int64 array."""
    arr = np.asarray(list(cells) if not isinstance(cells, np.ndarray) else cells, dtype=np.int64)
    return arr.reshape(-1, 2)


class RandomRegime(BaseModel):
    """Cells drawn uniformly without replacement."""

    kind: Literal["random"] = "random"
    fraction: float = Field(ge=0.0, le=1.0)


class BlockRegime(BaseModel):
    """Contiguous single-station runs."""

    kind: Literal["block"] = "block"
    fraction: float = Field(ge=0.0)
    min_len: int = Field(ge=1)
    max_len: int = Field(ge=1)

    @model_validator(mode="after")
    def check_lengths(self) -> "BlockRegime":
        if self.max_len < self.min_len:
            raise ValueError(f"max_len ({self.max_len}) must be >= min_len ({self.min_len})")
        return self


class MixedRegime(BaseModel):
    """Blocks for ``block_share`` of the budget, random cells for the rest."""

    kind: Literal["mixed"] = "mixed"
    fraction: float = Field(ge=0.0, le=1.0)
    block_share: float = Field(ge=0.0, le=1.0)
    min_len: int = Field(ge=1)
    max_len: int = Field(ge=1)


Regime = Union[RandomRegime, BlockRegime, MixedRegime]


class InjectionRecord(BaseModel):
    """Ground truth of one missingness injection.

    ``cells`` lists (row, station) pairs that were observed before injection and
    masked by it, sorted row-major.
    """

    seed: int = Field(ge=0, lt=2 ** 64)
    regime: Regime = Field(discriminator="kind")
    cells: List[Tuple[int, int]] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.cells)

    def cell_array(self) -> np.ndarray:
        return as_cell_array(self.cells)

    def offset(self, rows: int) -> "InjectionRecord":
        """Copy with every row index shifted by ``rows``."""
        return self.model_copy(update={"cells": [(r + rows, s) for r, s in self.cells]})

    def run_lengths(self) -> List[int]:
        """Lengths of contiguous per-station runs of injected cells."""
        lengths = []
        by_station = {}
        for row, station in self.cells:
            by_station.setdefault(station, []).append(row)
        for station in sorted(by_station):
            rows = sorted(by_station[station])
            run = 1
            for prev, cur in zip(rows, rows[1:]):
                if cur == prev + 1:
                    run += 1
                else:
                    lengths.append(run)
                    run = 1
            lengths.append(run)
        return lengths

    def to_json(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_json(cls, data: Union[str, bytes]) -> "InjectionRecord":
        return cls.model_validate_json(data)
