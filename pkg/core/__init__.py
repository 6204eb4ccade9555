"""Core series types for gapdyn."""

from .models import (
    GapDynError, EmptyRange, ShapeError,
    Space, TimeRange, SeriesMatrix, as_cell_array,
    RandomRegime, BlockRegime, MixedRegime, Regime, InjectionRecord
)

__all__ = [
    "GapDynError", "EmptyRange", "ShapeError",
    "Space", "TimeRange", "SeriesMatrix", "as_cell_array",
    "RandomRegime", "BlockRegime", "MixedRegime", "Regime", "InjectionRecord"
]
