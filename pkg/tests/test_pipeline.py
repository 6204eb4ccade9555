"""Tests for the experiment runner on small synthetic networks."""

import hashlib
import os
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from core import TimeRange
from dynamics import ShapeMismatch
from imputation import NoObservedData, target_count
from pipeline import (
    METHODS, ExperimentConfig, ExperimentRunner, InsufficientTraining, MethodName, ResultStatus,
    SyntheticConfig, derive_seed, generate_dataset, run_experiment
)
from evaluation import ScoreStatus
from pipeline.runner import __version__
from ingest import read_csv_file
from utils.config import Config

TRAIN = TimeRange(start=403224, end=403824)
EVAL = TimeRange(start=403824, end=404224)
LEVELS = [0.2, 0.5]

CONFIG_FILE = Path(__file__).resolve().parent.parent / "experiment_config" / "synthetic.json"


@pytest.fixture(scope="module")
def dataset():
    """1000 hours x 3 stations of synthetic data with background gaps."""
    return generate_dataset(SyntheticConfig(n_stations=3, n_hours=1000, seed=3))


def small_config(**overrides) -> ExperimentConfig:
    settings = {
        "train_range": TRAIN,
        "eval_range": EVAL,
        "missing_levels": LEVELS,
        "seed": 11,
        "lambda_selection": {"enabled": False},
        "soft_impute": {"lambda": 1.0, "max_iter": 200},
        "library": {"degree": 1},
    }
    settings.update(overrides)
    return ExperimentConfig.model_validate(settings)


class TestDeriveSeed:
    """Tests for per-level seed derivation."""

    def test_matches_hash(self):
        """Test the XOR-with-hash rule."""
        digest = int.from_bytes(hashlib.sha256(b"0.100000").digest()[:8], "big")
        assert derive_seed(0, 0.1) == digest
        assert derive_seed(5, 0.1) == digest ^ 5

    def test_levels_differ(self):
        """Test that each level gets its own stable seed."""
        seeds = [derive_seed(42, level) for level in LEVELS]
        assert len(set(seeds)) == len(LEVELS)
        assert seeds == [derive_seed(42, level) for level in LEVELS]
        assert all(0 <= s < 2 ** 64 for s in seeds)


class TestExperimentRunner:
    """Tests for the full method comparison."""

    def test_report_structure(self, dataset):
        """Test ordering, completeness and level summaries."""
        runner = ExperimentRunner(dataset.matrix, small_config())
        report = runner.run()

        assert [(r.method, r.level) for r in report.results] == [(m, lv) for m in METHODS for lv in LEVELS]
        assert all(r.status == ResultStatus.OK for r in report.results)
        for r in report.results:
            assert r.pooled.status == ScoreStatus.OK
            assert 0.0 <= r.pooled.ioa <= 1.0
            assert set(r.stations) == {"S1", "S2", "S3"}

        eval_observed = dataset.matrix.restrict(EVAL).observed_count()
        for summary in report.levels:
            assert summary.injected_cells == target_count(summary.level, eval_observed)
            assert summary.missing_cells >= summary.injected_cells

        assert report.version == __version__
        assert report.selected_lambda == 1.0
        assert report.sindy.n_pairs > 0
        assert set(report.curves) == {m.value for m in METHODS}
        assert report.curves["SI"][0].ioa == report.pooled_ioa(MethodName.SI, LEVELS[0])

    def test_injections_in_eval_coordinates(self, dataset):
        """Test that recorded cells index the evaluation period and were observed there."""
        runner = ExperimentRunner(dataset.matrix, small_config())
        runner.run()

        eval_raw = dataset.matrix.restrict(EVAL)
        for level in LEVELS:
            cells = runner.injections[level].cell_array()
            assert cells[:, 0].max() < eval_raw.n_rows
            assert eval_raw.mask[cells[:, 0], cells[:, 1]].all()

    def test_deterministic(self, dataset):
        """Test that repeated and threaded runs give the same report."""
        first = run_experiment(dataset.matrix, small_config())
        second = run_experiment(dataset.matrix, small_config())
        threaded = run_experiment(dataset.matrix, small_config(workers=2))

        assert first.model_dump() == second.model_dump()
        assert threaded.results == first.results
        assert threaded.curves == first.curves

    def test_estimates_keep_observed_cells(self, dataset):
        """Test that exported estimates agree with the truth off the injected cells."""
        runner = ExperimentRunner(dataset.matrix, small_config(), keep_estimates=True)
        runner.run()

        eval_raw = runner.eval_raw
        record = runner.injections[LEVELS[0]]
        untouched = eval_raw.mask.copy()
        cells = record.cell_array()
        untouched[cells[:, 0], cells[:, 1]] = False

        estimates = runner.estimates[LEVELS[0]]
        assert set(estimates) == {m.value for m in METHODS}
        for estimate in estimates.values():
            assert estimate.shape == eval_raw.shape
            assert estimate.is_complete
            assert np.allclose(estimate.values[untouched], eval_raw.values[untouched], atol=1e-9)

    def test_base_failure_fails_hybrid(self, dataset):
        """Test that a failing imputer degrades to Failed entries without aborting the run."""
        with patch("pipeline.runner.knn_impute", side_effect=NoObservedData("no observations")):
            report = run_experiment(dataset.matrix, small_config())

        for level in LEVELS:
            assert report.result(MethodName.KNN, level).status == ResultStatus.FAILED
            assert report.result(MethodName.KNN_SINDY, level).status == ResultStatus.FAILED
            assert "NoObservedData" in report.result(MethodName.KNN, level).error
            assert report.result(MethodName.SI, level).status == ResultStatus.OK
            assert report.result(MethodName.SI_SINDY, level).status == ResultStatus.OK
        assert all(point.ioa is None for point in report.curves["KNN"])

    def test_refinement_failure(self, dataset):
        """Test that a refinement error only fails the hybrid methods."""
        with patch("pipeline.runner.refine_imputation", side_effect=ShapeMismatch("stations differ")):
            report = run_experiment(dataset.matrix, small_config())

        statuses = {(r.method, r.level): r.status for r in report.results}
        for level in LEVELS:
            assert statuses[(MethodName.SI, level)] == ResultStatus.OK
            assert statuses[(MethodName.KNN, level)] == ResultStatus.OK
            assert statuses[(MethodName.SI_SINDY, level)] == ResultStatus.FAILED
            assert statuses[(MethodName.KNN_SINDY, level)] == ResultStatus.FAILED

    def test_injection_failure_fails_level(self, dataset):
        """Test that a level whose injection fails is reported as Failed while the other levels run."""
        real_inject = ExperimentRunner.inject

        def inject_or_fail(runner, level, seed):
            if level == LEVELS[1]:
                raise ValueError("Block lengths need max_len <= rows")
            return real_inject(runner, level, seed)

        with patch.object(ExperimentRunner, "inject", inject_or_fail):
            runner = ExperimentRunner(dataset.matrix, small_config())
            report = runner.run()

        assert set(runner.injections) == {LEVELS[0]}
        for method in METHODS:
            assert report.result(method, LEVELS[0]).status == ResultStatus.OK
            failed = report.result(method, LEVELS[1])
            assert failed.status == ResultStatus.FAILED
            assert "ValueError" in failed.error
        assert report.levels[1].injected_cells == 0

    def test_insufficient_training(self, dataset):
        """Test the training-coverage guard."""
        with pytest.raises(InsufficientTraining):
            run_experiment(dataset.matrix, small_config(min_train_observed=0.999))

    @pytest.mark.parametrize("overrides", [
        {"imputation_scope": "eval"},
        {"normalization_scope": "all"},
        {"regime": "block", "blocks": {"min_len": 3, "max_len": 12}},
        {"regime": "mixed", "blocks": {"min_len": 3, "max_len": 12, "block_share": 0.5}},
        {"lambda_selection": {"enabled": True, "grid": [0.1, 1.0, 10.0]}},
    ])
    def test_variants_complete(self, dataset, overrides):
        """Test that every scope, regime and selection variant gives a complete report."""
        report = run_experiment(dataset.matrix, small_config(**overrides))

        assert len(report.results) == len(METHODS) * len(LEVELS)
        assert all(r.status == ResultStatus.OK for r in report.results)


class TestExperimentConfig:
    """Tests for configuration validation."""

    def test_levels_must_increase(self):
        """Test level ordering and bounds."""
        with pytest.raises(ValueError):
            small_config(missing_levels=[0.5, 0.2])
        with pytest.raises(ValueError):
            small_config(missing_levels=[0.0, 0.2])

    def test_ranges_must_be_disjoint(self):
        """Test overlapping training and evaluation ranges."""
        with pytest.raises(ValueError):
            small_config(eval_range=TimeRange(start=403800, end=404224))


@pytest.mark.slow
def test_synthetic_two_year_ordering():
    """Test the method ordering and level monotonicity on the bundled two-year fixture."""
    config = Config(CONFIG_FILE)
    cfg = config.experiment_config().model_copy(update={"workers": 4})
    data = generate_dataset(SyntheticConfig.model_validate(config.SYNTHETIC)).matrix

    report = run_experiment(data, cfg)

    for level in cfg.missing_levels:
        knn_sindy = report.pooled_ioa(MethodName.KNN_SINDY, level)
        assert knn_sindy >= report.pooled_ioa(MethodName.KNN, level), level
        if level >= 0.5:
            assert knn_sindy >= report.pooled_ioa(MethodName.SI_SINDY, level), level

    for method in METHODS:
        curve = [point.ioa for point in report.curves[method.value]]
        assert all(later <= earlier + 0.01 for earlier, later in zip(curve, curve[1:]))


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get("GAPDYN_AIRKOREA_CSV"), reason="GAPDYN_AIRKOREA_CSV not set")
def test_airkorea_ordering():
    """Test the method ordering on user-supplied 2016-2017 station data."""
    data = read_csv_file(os.environ["GAPDYN_AIRKOREA_CSV"])
    report = run_experiment(data, ExperimentConfig(workers=4))

    low, high = report.config.missing_levels[0], report.config.missing_levels[-1]
    assert report.pooled_ioa(MethodName.KNN_SINDY, high) >= report.pooled_ioa(MethodName.KNN, high)
    assert report.pooled_ioa(MethodName.SI_SINDY, high) >= report.pooled_ioa(MethodName.SI, high)
    assert report.pooled_ioa(MethodName.KNN, high) >= report.pooled_ioa(MethodName.SI, high)
    # Soft impute degrades sharply at high missing levels
    assert report.pooled_ioa(MethodName.SI, low) - report.pooled_ioa(MethodName.SI, high) > 0.25
