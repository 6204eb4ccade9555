"""Experiment orchestration.

Fits normalization and dynamics on the training period, then for each
missing level injects gaps into the evaluation period, imputes with soft
impute and KNN, refines both with one-step dynamics predictions, and scores
all four estimates at the injected cells in raw units.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

from core import GapDynError, InjectionRecord, SeriesMatrix, TimeRange
from dynamics import SindyModel, fit, refine_imputation
from evaluation.metrics import ScoreStatus, score_at_cells
from imputation import (
    inject_random, inject_blocks, inject_mixed,
    knn_impute, select_lambda, soft_impute_run
)
from ingest.normalization import NormParams, fit_normalization, normalize, denormalize
from .models import (
    METHODS, CurvePoint, ExperimentConfig, ExperimentReport, ImputationScope, InjectionMode,
    LevelSummary, MethodName, MethodResult, NormalizationScope, ResultStatus
)

logger = logging.getLogger(__name__)

__version__ = "0.1.0"


class InsufficientTraining(GapDynError):
    """The training period is too sparsely observed."""
    pass


class GroundTruthError(GapDynError):
    """An injected cell has no recoverable pre-injection value."""
    pass


def derive_seed(seed: int, level: float) -> int:
    """Per-level seed: seed XOR a stable 64-bit hash of the level."""
    digest = hashlib.sha256(f"{level:.6f}".encode("ascii")).digest()
    return (seed ^ int.from_bytes(digest[:8], "big")) & (2 ** 64 - 1)


class ExperimentRunner:
    """State of one comparison run."""

    def __init__(self, data: SeriesMatrix, cfg: ExperimentConfig, keep_estimates: bool = False):
        """Initialize the runner.

        Args:
            data: Raw-space series covering both the training and evaluation ranges
            cfg: Experiment configuration
            keep_estimates: Keep the raw evaluation-period estimates of every level for export
        """
        self.data = data
        self.cfg = cfg
        self.keep_estimates = keep_estimates

        self.norm: Optional[NormParams] = None
        self.model: Optional[SindyModel] = None
        self.lambda_: Optional[float] = None
        self.eval_raw: Optional[SeriesMatrix] = None
        self.work: Optional[SeriesMatrix] = None
        self.eval_offset = 0

        self.injections: Dict[float, InjectionRecord] = {}
        self.estimates: Dict[float, Dict[str, SeriesMatrix]] = {}

    def prepare(self) -> None:
        """Restrict, normalize, fit dynamics and choose the shrinkage.

        Raises:
            InsufficientTraining: If the training period is observed below cfg.min_train_observed
        """
        cfg = self.cfg
        train_raw = self.data.restrict(cfg.train_range)
        self.eval_raw = self.data.restrict(cfg.eval_range)

        observed = train_raw.observed_fraction()
        if observed < cfg.min_train_observed:
            raise InsufficientTraining(
                f"Training period is {observed:.1%} observed; at least {cfg.min_train_observed:.0%} required"
            )

        if cfg.imputation_scope == ImputationScope.CONCATENATED:
            work_raw = self.data.restrict(TimeRange.hull(cfg.train_range, cfg.eval_range))
        else:
            work_raw = self.eval_raw
        self.eval_offset = work_raw.row_index(int(self.eval_raw.timestamps[0]))

        if cfg.normalization_scope == NormalizationScope.TRAIN:
            self.norm = fit_normalization(train_raw)
        else:
            self.norm = fit_normalization(self.data.restrict(TimeRange.hull(cfg.train_range, cfg.eval_range)))
        self.work = normalize(work_raw, self.norm)
        train = normalize(train_raw, self.norm)

        self.model = fit(train, cfg.library, cfg.sindy.threshold, cfg.sindy.ridge, cfg.sindy.max_rounds)
        self.model = self.model.model_copy(update={"normalization": self.norm})

        if cfg.lambda_selection.enabled:
            self.lambda_ = select_lambda(train, cfg.lambda_selection.grid, cfg.lambda_selection.holdout_fraction,
                                         cfg.seed, cfg.soft_impute)
        else:
            self.lambda_ = cfg.soft_impute.lambda_
        logger.info(f"Prepared run: {train_raw.n_rows} training hours, {self.eval_raw.n_rows} evaluation hours, "
                    f"lambda={self.lambda_:g}")

    def inject(self, level: float, seed: int) -> InjectionRecord:
        """Inject missingness into the evaluation period (record in evaluation-row coordinates)."""
        target = self.eval_raw
        blocks = self.cfg.blocks
        if self.cfg.regime == InjectionMode.RANDOM:
            _, record = inject_random(target, level, seed)
        elif self.cfg.regime == InjectionMode.BLOCK:
            _, record = inject_blocks(target, level, blocks.min_len, blocks.max_len, seed)
        else:
            _, record = inject_mixed(target, level, blocks.block_share, blocks.min_len, blocks.max_len, seed)

        cells = record.cell_array()
        if len(cells) and not target.mask[cells[:, 0], cells[:, 1]].all():
            raise GroundTruthError(f"Injection at level {level} masked cells without an observed value")
        return record

    def _score(self, method: MethodName, level: float, estimate: SeriesMatrix,
               record: InjectionRecord, convergence: Optional[dict]) -> MethodResult:
        eval_estimate = denormalize(estimate.restrict(self.cfg.eval_range), self.norm)
        scores = score_at_cells(self.eval_raw, eval_estimate, record.cell_array())
        if self.keep_estimates:
            self.estimates.setdefault(level, {})[method.value] = eval_estimate
        return MethodResult(method=method, level=level, pooled=scores.pooled, stations=scores.stations,
                            convergence=convergence)

    def _failed(self, method: MethodName, level: float, error: Exception) -> MethodResult:
        message = f"{getattr(error, 'code', type(error).__name__)}: {error}"
        logger.error(f"{method.value} failed at level {level}: {message}")
        return MethodResult(method=method, level=level, status=ResultStatus.FAILED, error=message)

    def run_level(self, level: float) -> Tuple[LevelSummary, List[MethodResult]]:
        seed = derive_seed(self.cfg.seed, level)
        try:
            record = self.inject(level, seed)
        except (GapDynError, ValueError) as e:
            summary = LevelSummary(level=level, seed=seed, injected_cells=0, missing_cells=0)
            return summary, [self._failed(method, level, e) for method in METHODS]
        self.injections[level] = record

        work_input = self.work.mask_cells(record.offset(self.eval_offset).cell_array())
        eval_rows = (self.eval_offset, self.eval_offset + self.eval_raw.n_rows)
        refine_cells = work_input.missing_cells(rows=eval_rows)
        summary = LevelSummary(level=level, seed=seed, injected_cells=len(record),
                               missing_cells=len(refine_cells))
        logger.info(f"Level {level:g}: {len(record)} injected cells, {len(refine_cells)} cells to fill")

        results = {}
        passes = self.cfg.sindy.passes
        imputers = [
            (MethodName.SI, MethodName.SI_SINDY, self._run_soft_impute),
            (MethodName.KNN, MethodName.KNN_SINDY, self._run_knn),
        ]
        for base, hybrid, imputer in imputers:
            try:
                imputed, convergence = imputer(work_input)
                results[base] = self._score(base, level, imputed, record, convergence)
            except GapDynError as e:
                results[base] = self._failed(base, level, e)
                results[hybrid] = self._failed(hybrid, level, e)
                continue
            try:
                refined = refine_imputation(self.model, imputed, refine_cells, passes=passes)
                results[hybrid] = self._score(hybrid, level, refined, record, convergence)
            except GapDynError as e:
                results[hybrid] = self._failed(hybrid, level, e)

        return summary, [results[m] for m in METHODS]

    def _run_soft_impute(self, m: SeriesMatrix) -> Tuple[SeriesMatrix, dict]:
        result = soft_impute_run(m, self.cfg.soft_impute.model_copy(update={"lambda_": self.lambda_}))
        return result.matrix, result.metadata()

    def _run_knn(self, m: SeriesMatrix) -> Tuple[SeriesMatrix, dict]:
        return knn_impute(m, self.cfg.knn), None

    def run(self) -> ExperimentReport:
        self.prepare()
        levels = list(self.cfg.missing_levels)

        if self.cfg.workers > 1 and len(levels) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers, thread_name_prefix="level") as pool:
                outcomes = dict(zip(levels, pool.map(self.run_level, levels)))
        else:
            outcomes = {level: self.run_level(level) for level in levels}

        summaries = [outcomes[level][0] for level in levels]
        by_key = {(r.method, r.level): r for level in levels for r in outcomes[level][1]}
        results = [by_key[(method, level)] for method in METHODS for level in levels]

        curves = {
            method.value: [
                CurvePoint(level=level, ioa=by_key[(method, level)].pooled.ioa
                           if by_key[(method, level)].pooled.status == ScoreStatus.OK else None)
                for level in levels
            ]
            for method in METHODS
        }

        return ExperimentReport(
            version=__version__,
            config=self.cfg,
            seed=self.cfg.seed,
            station_ids=list(self.data.station_ids),
            selected_lambda=self.lambda_,
            sindy=self.model.diagnostics,
            levels=summaries,
            results=results,
            curves=curves,
        )


def run_experiment(data: SeriesMatrix, cfg: ExperimentConfig) -> ExperimentReport:
    """Run the full comparison and return its report."""
    return ExperimentRunner(data, cfg).run()
