"""Missingness injection and imputation methods."""

from .missingness import Unsatisfiable, target_count, inject_random, inject_blocks, inject_mixed
from .soft_impute import (
    NoObservedData, SvdFailure, InitMode, SoftImputeConfig, SoftImputeResult, DEFAULT_LAMBDA_GRID,
    soft_threshold, shrink_step, soft_impute, soft_impute_run, select_lambda
)
from .knn import KnnFallback, KnnConfig, masked_distance, knn_impute

__all__ = [
    "Unsatisfiable", "target_count", "inject_random", "inject_blocks", "inject_mixed",
    "NoObservedData", "SvdFailure", "InitMode", "SoftImputeConfig", "SoftImputeResult", "DEFAULT_LAMBDA_GRID",
    "soft_threshold", "shrink_step", "soft_impute", "soft_impute_run", "select_lambda",
    "KnnFallback", "KnnConfig", "masked_distance", "knn_impute"
]
