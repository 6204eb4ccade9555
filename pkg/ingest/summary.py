"""Per-station coverage and level summary."""

from typing import List

import numpy as np
from pydantic import BaseModel

from core import SeriesMatrix


class StationSummary(BaseModel):
    station_id: str
    n_rows: int
    observed: int
    missing_fraction: float
    mean: float
    std: float

    def describe(self) -> str:
        return (f"{self.station_id}: {self.mean:.2f} ({self.std:.2f}), "
                f"{self.missing_fraction * 100:.1f}% missing of {self.n_rows} hours")


def summarize(m: SeriesMatrix) -> List[StationSummary]:
    """Observed count, missing share, mean and sample std per station.

    Statistics are NaN for stations with fewer than two observations.
    """
    summaries = []
    for j, station_id in enumerate(m.station_ids):
        observed = m.values[m.mask[:, j], j]
        enough = observed.size >= 2
        summaries.append(StationSummary(
            station_id=station_id,
            n_rows=m.n_rows,
            observed=int(observed.size),
            missing_fraction=1.0 - observed.size / m.n_rows if m.n_rows else 0.0,
            mean=float(np.mean(observed)) if enough else float("nan"),
            std=float(np.std(observed, ddof=1)) if enough else float("nan"),
        ))
    return summaries
