"""Experiment configuration and report models."""

import logging
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core import TimeRange
from dynamics.library import LibrarySpec
from dynamics.sindy import SindyDiagnostics
from evaluation.metrics import ScoreEntry
from imputation.knn import KnnConfig
from imputation.soft_impute import DEFAULT_LAMBDA_GRID, SoftImputeConfig

logger = logging.getLogger(__name__)

# Calendar years as epoch-hour ranges (local standard time).
YEAR_2016 = TimeRange(start=403224, end=412008)
YEAR_2017 = TimeRange(start=412008, end=420768)

DEFAULT_LEVELS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]


class MethodName(str, Enum):
    """Reported methods, in report order."""

    SI = "SI"
    KNN = "KNN"
    SI_SINDY = "SI-SINDy"
    KNN_SINDY = "KNN-SINDy"


METHODS = [MethodName.SI, MethodName.KNN, MethodName.SI_SINDY, MethodName.KNN_SINDY]


class InjectionMode(str, Enum):
    RANDOM = "random"
    BLOCK = "block"
    MIXED = "mixed"


class NormalizationScope(str, Enum):
    """Rows the normalization is fitted on."""

    TRAIN = "train"
    ALL = "all"


class ImputationScope(str, Enum):
    """Rows the imputers see: training and evaluation together, or evaluation only."""

    CONCATENATED = "concatenated"
    EVAL = "eval"


class BlockSettings(BaseModel):
    min_len: int = Field(6, ge=1)
    max_len: int = Field(72, ge=1)
    block_share: float = Field(0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_lengths(self) -> "BlockSettings":
        if self.max_len < self.min_len:
            raise ValueError(f"max_len ({self.max_len}) must be >= min_len ({self.min_len})")
        return self


class LambdaSelection(BaseModel):
    """Holdout search for the soft-impute shrinkage on the training period."""

    enabled: bool = True
    grid: List[float] = Field(default_factory=lambda: list(DEFAULT_LAMBDA_GRID), min_length=1)
    holdout_fraction: float = Field(0.1, gt=0.0, le=0.5)


class SindyParams(BaseModel):
    threshold: float = Field(0.05, ge=0.0)
    ridge: float = Field(1e-6, ge=0.0)
    max_rounds: int = Field(20, ge=1)
    passes: int = Field(1, ge=1)


class ExperimentConfig(BaseModel):
    """Full description of one comparison run."""

    model_config = ConfigDict(populate_by_name=True)

    train_range: TimeRange = YEAR_2016
    eval_range: TimeRange = YEAR_2017
    missing_levels: List[float] = Field(default_factory=lambda: list(DEFAULT_LEVELS))
    regime: InjectionMode = InjectionMode.RANDOM
    blocks: BlockSettings = Field(default_factory=BlockSettings)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    soft_impute: SoftImputeConfig = Field(default_factory=SoftImputeConfig)
    lambda_selection: LambdaSelection = Field(default_factory=LambdaSelection)
    knn: KnnConfig = Field(default_factory=KnnConfig)
    library: LibrarySpec = Field(default_factory=LibrarySpec)
    sindy: SindyParams = Field(default_factory=SindyParams)
    normalization_scope: NormalizationScope = NormalizationScope.TRAIN
    imputation_scope: ImputationScope = ImputationScope.CONCATENATED
    min_train_observed: float = Field(0.9, ge=0.0, le=1.0)
    workers: int = Field(1, ge=1)

    @field_validator("missing_levels")
    @classmethod
    def check_levels(cls, levels: List[float]) -> List[float]:
        for level in levels:
            if not 0.0 < level < 1.0:
                raise ValueError(f"Missing level {level} outside (0, 1)")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"Missing levels must be strictly increasing: {levels}")
        return levels

    @model_validator(mode="after")
    def check_ranges(self) -> "ExperimentConfig":
        if self.train_range.overlaps(self.eval_range):
            raise ValueError("train_range and eval_range must be disjoint")
        return self


class ResultStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class MethodResult(BaseModel):
    """Scores of one method at one missing level."""

    method: MethodName
    level: float
    status: ResultStatus = ResultStatus.OK
    error: Optional[str] = None
    pooled: ScoreEntry = Field(default_factory=ScoreEntry)
    stations: Dict[str, ScoreEntry] = Field(default_factory=dict)
    convergence: Optional[Dict[str, Any]] = None


class LevelSummary(BaseModel):
    level: float
    seed: int
    injected_cells: int
    missing_cells: int


class CurvePoint(BaseModel):
    level: float
    ioa: Optional[float] = None


class ExperimentReport(BaseModel):
    """Per-method, per-level, per-station agreement table and run metadata."""

    version: str
    config: ExperimentConfig
    seed: int
    station_ids: List[str]
    selected_lambda: Optional[float] = None
    sindy: Optional[SindyDiagnostics] = None
    levels: List[LevelSummary] = Field(default_factory=list)
    results: List[MethodResult] = Field(default_factory=list)
    curves: Dict[str, List[CurvePoint]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_complete(self) -> "ExperimentReport":
        present = {(r.method, r.level) for r in self.results}
        missing = [(m.value, lv.level) for m in METHODS for lv in self.levels if (m, lv.level) not in present]
        if missing:
            raise ValueError(f"Report lacks results for {missing}")
        return self

    def result(self, method: MethodName, level: float) -> MethodResult:
        for r in self.results:
            if r.method == method and r.level == level:
                return r
        raise KeyError(f"No result for {method.value} at level {level}")

    def pooled_ioa(self, method: MethodName, level: float) -> Optional[float]:
        return self.result(method, level).pooled.ioa
