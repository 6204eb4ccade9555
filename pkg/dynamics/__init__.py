"""Sparse identification of one-step station dynamics."""

from .library import LibrarySpec, build_library, term_names
from .sindy import (
    RankDeficient, InsufficientPairs, ShapeMismatch, SindyDiagnostics, SindyModel,
    stlsq, usable_pairs, fit, predict_one_step, refine_imputation, predict_series
)

__all__ = [
    "LibrarySpec", "build_library", "term_names",
    "RankDeficient", "InsufficientPairs", "ShapeMismatch", "SindyDiagnostics", "SindyModel",
    "stlsq", "usable_pairs", "fit", "predict_one_step", "refine_imputation", "predict_series"
]
