"""Experiment pipeline: configuration, orchestration, reports and synthetic data."""

from .models import (
    YEAR_2016, YEAR_2017, DEFAULT_LEVELS, MethodName, METHODS, InjectionMode, NormalizationScope,
    ImputationScope, BlockSettings, LambdaSelection, SindyParams, ExperimentConfig, ResultStatus,
    MethodResult, LevelSummary, CurvePoint, ExperimentReport
)
from .runner import InsufficientTraining, GroundTruthError, derive_seed, ExperimentRunner, run_experiment
from .report import ReportFormat, emit_report, load_report, report_rows, level_label, write_series_csv
from .synthetic import SyntheticConfig, SyntheticDataset, generate_dataset, simulate_linear, sparse_stable_dynamics

__all__ = [
    "YEAR_2016", "YEAR_2017", "DEFAULT_LEVELS", "MethodName", "METHODS", "InjectionMode", "NormalizationScope",
    "ImputationScope", "BlockSettings", "LambdaSelection", "SindyParams", "ExperimentConfig", "ResultStatus",
    "MethodResult", "LevelSummary", "CurvePoint", "ExperimentReport",
    "InsufficientTraining", "GroundTruthError", "derive_seed", "ExperimentRunner", "run_experiment",
    "ReportFormat", "emit_report", "load_report", "report_rows", "level_label", "write_series_csv",
    "SyntheticConfig", "SyntheticDataset", "generate_dataset", "simulate_linear", "sparse_stable_dynamics"
]
