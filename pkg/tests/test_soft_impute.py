"""Tests for soft-impute matrix completion."""

import numpy as np
import pytest

from core import Space
from imputation import (
    NoObservedData, InitMode, SoftImputeConfig, DEFAULT_LAMBDA_GRID,
    soft_threshold, shrink_step, soft_impute, soft_impute_run, select_lambda, inject_random
)


def low_rank(rng, n_rows=200, n_cols=5, rank=2) -> np.ndarray:
    return rng.normal(size=(n_rows, rank)) @ rng.normal(size=(rank, n_cols))


def test_soft_threshold():
    """Test the shrinkage operator."""
    assert soft_threshold(np.array([3.0, 1.0, 0.5]), 1.0).tolist() == [2.0, 0.0, 0.0]
    assert soft_threshold(np.array([3.0, 1.0]), 0.0).tolist() == [3.0, 1.0]
    assert soft_threshold(np.array([5.0]), 7.0).tolist() == [0.0]


def test_shrink_step_identity(rng):
    """Test that zero shrinkage reconstructs the input."""
    x = rng.normal(size=(20, 4))
    assert np.allclose(shrink_step(x, 0.0), x, atol=1e-9)


def test_shrink_step_rank_one():
    """Test hand-computed shrinkage of a rank-1 matrix (sigma 5 -> 4)."""
    x = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert np.allclose(shrink_step(x, 1.0), 0.8 * x, atol=1e-12)


def test_shrink_step_full_shrinkage(rng):
    """Test that lambda above the top singular value gives zero."""
    x = rng.normal(size=(10, 3))
    sigma_max = np.linalg.svd(x, compute_uv=False)[0]
    assert np.allclose(shrink_step(x, sigma_max + 1.0), 0.0)


def test_shrink_step_reduces_nuclear_norm(rng):
    """Test monotone shrinkage of the nuclear norm and rank."""
    x = rng.normal(size=(30, 5))
    shrunk = shrink_step(x, 2.0)

    assert np.linalg.norm(shrunk, "nuc") <= np.linalg.norm(x, "nuc")
    assert np.linalg.matrix_rank(shrunk) <= np.linalg.matrix_rank(x)


def test_complete_matrix_unchanged(rng, build_matrix):
    """Test the no-op case."""
    m = build_matrix(rng.normal(size=(10, 3)), space=Space.NORMALIZED)
    result = soft_impute_run(m, SoftImputeConfig())

    assert result.matrix == m
    assert result.iterations == 0
    assert result.converged


def test_rank_one_cell_recovery(build_matrix):
    """Test filling one cell of a rank-1 matrix."""
    m = build_matrix([[1.0, np.nan], [2.0, 4.0]], space=Space.NORMALIZED)
    cfg = SoftImputeConfig(**{"lambda": 0.01}, tol=1e-8, max_iter=2000)
    filled = soft_impute(m, cfg)

    assert filled.values[0, 1] == pytest.approx(2.0, abs=0.05)


def test_observed_cells_preserved(rng, build_matrix):
    """Test bit-identical observed cells and a fully filled output."""
    values = low_rank(rng, 60, 5)
    values[rng.random(values.shape) < 0.3] = np.nan
    m = build_matrix(values, space=Space.NORMALIZED)
    result = soft_impute_run(m, SoftImputeConfig(**{"lambda": 0.5}))

    assert result.matrix.is_complete
    assert np.array_equal(result.matrix.values[m.mask], m.values[m.mask])
    assert result.iterations == len(result.history)
    assert result.metadata()["lambda"] == 0.5


def test_non_convergence_is_flagged(rng, build_matrix):
    """Test that running out of iterations is reported, not raised."""
    values = low_rank(rng, 60, 5)
    values[rng.random(values.shape) < 0.3] = np.nan
    m = build_matrix(values, space=Space.NORMALIZED)
    result = soft_impute_run(m, SoftImputeConfig(**{"lambda": 0.01}, tol=1e-9, max_iter=3))

    assert not result.converged
    assert result.iterations == 3
    assert result.final_delta == min(result.history)
    assert result.matrix.is_complete


def test_zero_init(rng, build_matrix):
    """Test the zero initialization mode."""
    values = low_rank(rng, 40, 4)
    values[rng.random(values.shape) < 0.2] = np.nan
    m = build_matrix(values, space=Space.NORMALIZED)
    result = soft_impute_run(m, SoftImputeConfig(init=InitMode.ZERO, max_iter=50))

    assert result.matrix.is_complete


def test_no_observed_data(build_matrix):
    """Test a station without observations."""
    m = build_matrix([[1.0, np.nan], [2.0, np.nan]], space=Space.NORMALIZED)
    with pytest.raises(NoObservedData):
        soft_impute(m, SoftImputeConfig())


def test_config_validation():
    """Test configuration bounds and the lambda alias."""
    assert SoftImputeConfig(**{"lambda": 2.0}).lambda_ == 2.0
    assert SoftImputeConfig(lambda_=3.0).lambda_ == 3.0
    with pytest.raises(ValueError):
        SoftImputeConfig(tol=1.5)
    with pytest.raises(ValueError):
        SoftImputeConfig(max_iter=0)


def test_select_lambda_single_and_errors(rng, build_matrix):
    """Test the trivial grid and argument validation."""
    m = build_matrix(low_rank(rng, 30, 4), space=Space.NORMALIZED)

    assert select_lambda(m, [0.7], 0.1, seed=0) == 0.7
    with pytest.raises(ValueError):
        select_lambda(m, [], 0.1, seed=0)
    with pytest.raises(ValueError):
        select_lambda(m, [1.0, 2.0], 0.6, seed=0)


def test_select_lambda_minimizes_holdout(rng, build_matrix):
    """Test that the chosen lambda beats the alternatives on the holdout."""
    values = low_rank(rng, 100, 5)
    values[rng.random(values.shape) < 0.2] = np.nan
    m = build_matrix(values, space=Space.NORMALIZED)
    grid = [0.01, 1.0, 100.0]
    cfg = SoftImputeConfig(max_iter=300)

    chosen = select_lambda(m, grid, 0.1, seed=5, cfg=cfg)
    assert chosen == select_lambda(m, grid, 0.1, seed=5, cfg=cfg)

    # Recompute the holdout errors independently
    held_out, record = inject_random(m, 0.1, 5)
    cells = record.cell_array()
    truth = m.values[cells[:, 0], cells[:, 1]]
    errors = {}
    for lambda_ in grid:
        filled = soft_impute(held_out, cfg.model_copy(update={"lambda_": lambda_}))
        errors[lambda_] = np.sqrt(np.mean((filled.values[cells[:, 0], cells[:, 1]] - truth) ** 2))
    assert errors[chosen] == min(errors.values())


def test_low_rank_recovery(build_matrix):
    """Test recovery of a rank-2 matrix with 30% of cells masked.

    Rows left with fewer than rank + 1 observed entries do not determine their
    masked cells, so the error is measured on rows with at least three.
    """
    rng = np.random.default_rng(2024)
    truth = low_rank(rng, 200, 5)
    missing = rng.random(truth.shape) < 0.3
    m = build_matrix(np.where(missing, np.nan, truth), space=Space.NORMALIZED)

    cfg = SoftImputeConfig(tol=1e-7, max_iter=3000)
    lambda_ = select_lambda(m, list(np.logspace(-2, 0, 5)), 0.1, seed=0, cfg=cfg)
    filled = soft_impute(m, cfg.model_copy(update={"lambda_": lambda_}))

    identifiable = (~missing).sum(axis=1) >= 3
    scored = missing & identifiable[:, None]
    error = np.linalg.norm(filled.values[scored] - truth[scored]) / np.linalg.norm(truth[scored])
    assert error < 0.05


def test_default_grid():
    """Test the default logarithmic grid."""
    assert len(DEFAULT_LAMBDA_GRID) == 7
    assert DEFAULT_LAMBDA_GRID[0] == pytest.approx(0.01)
    assert DEFAULT_LAMBDA_GRID[-1] == pytest.approx(100.0)
