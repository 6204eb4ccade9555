"""Evaluation metrics."""

from .metrics import (
    DegenerateObserved, TruthMissing, ScoreStatus, ScoreEntry, CellScores,
    ioa, rmse, score_at_cells
)

__all__ = [
    "DegenerateObserved", "TruthMissing", "ScoreStatus", "ScoreEntry", "CellScores",
    "ioa", "rmse", "score_at_cells"
]
