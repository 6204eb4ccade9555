"""Matrix completion by iterative soft-thresholded SVD (nuclear-norm regularization)."""

import logging
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core import GapDynError, SeriesMatrix, Space
from evaluation.metrics import rmse
from .missingness import inject_random

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = [float(x) for x in np.logspace(-2, 2, 7)]


class NoObservedData(GapDynError):
    """A station has no observed cells to learn from."""
    pass


class SvdFailure(GapDynError):
    """The singular value decomposition did not converge."""
    pass


class InitMode(str, Enum):
    """Initial fill of masked cells."""

    ZERO = "zero"
    COLUMN_MEAN = "column_mean"


class SoftImputeConfig(BaseModel):
    """Soft-impute settings."""

    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(1.0, alias="lambda", ge=0.0)
    tol: float = Field(1e-5, gt=0.0, lt=1.0)
    max_iter: int = Field(500, ge=1)
    init: InitMode = InitMode.COLUMN_MEAN


class SoftImputeResult(BaseModel):
    """Completed matrix plus convergence metadata."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: SeriesMatrix
    lambda_: float
    iterations: int
    final_delta: float
    converged: bool
    history: List[float]

    def metadata(self) -> dict:
        return {
            "lambda": self.lambda_,
            "iterations": self.iterations,
            "final_delta": self.final_delta,
            "converged": self.converged,
        }


def soft_threshold(singular_values: np.ndarray, lambda_: float) -> np.ndarray:
    """Elementwise max(sigma - lambda, 0)."""
    return np.maximum(np.asarray(singular_values, dtype=np.float64) - lambda_, 0.0)


def shrink_step(filled: np.ndarray, lambda_: float) -> np.ndarray:
    """U diag(soft_threshold(sigma, lambda)) V^T of a complete matrix.

    Raises:
        SvdFailure: If the decomposition does not converge
    """
    try:
        u, sigma, vt = np.linalg.svd(filled, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise SvdFailure(f"SVD did not converge: {e}")
    return (u * soft_threshold(sigma, lambda_)) @ vt


def _check_input(m: SeriesMatrix) -> None:
    if m.space != Space.NORMALIZED:
        logger.warning(f"Soft impute on a {m.space.value} series; normalized input is expected")
    empty = [s for j, s in enumerate(m.station_ids) if not m.mask[:, j].any()]
    if empty or m.n_rows == 0:
        raise NoObservedData(f"Stations without observations: {empty}")


def soft_impute_run(m: SeriesMatrix, cfg: SoftImputeConfig) -> SoftImputeResult:
    """Fixed-point soft impute with convergence history.

    Stops when ||Z_new - Z_old||_F / ||Z_old||_F <= tol or after max_iter
    iterations. Non-convergence is reported, not raised; the iterate with the
    smallest relative change is returned in that case.

    Raises:
        NoObservedData: If a station has no observed cells
        SvdFailure: If an SVD fails
    """
    _check_input(m)
    observed = np.where(m.mask, m.values, 0.0)

    if m.is_complete:
        return SoftImputeResult(matrix=m, lambda_=cfg.lambda_, iterations=0,
                                final_delta=0.0, converged=True, history=[])

    if cfg.init == InitMode.COLUMN_MEAN:
        start = np.broadcast_to(np.nanmean(np.where(m.mask, m.values, np.nan), axis=0), m.shape)
    else:
        start = np.zeros(m.shape)
    estimate = np.where(m.mask, observed, start)

    history = []
    best, best_delta = estimate, np.inf
    converged = False
    for iteration in range(1, cfg.max_iter + 1):
        low_rank = shrink_step(estimate, cfg.lambda_)
        updated = np.where(m.mask, observed, low_rank)
        delta = float(np.linalg.norm(updated - estimate) / max(np.linalg.norm(estimate), 1e-12))
        history.append(delta)
        estimate = updated
        if delta < best_delta:
            best, best_delta = updated, delta
        if delta <= cfg.tol:
            converged = True
            break

    if converged:
        best, best_delta = estimate, history[-1]
        logger.debug(f"Soft impute converged in {len(history)} iterations (lambda={cfg.lambda_}, delta={best_delta:.3e})")
    else:
        logger.warning(f"Soft impute did not converge in {cfg.max_iter} iterations "
                       f"(lambda={cfg.lambda_}, best delta={best_delta:.3e})")

    filled = np.where(m.mask, m.values, best)
    return SoftImputeResult(
        matrix=m.with_values(filled, mask=np.ones(m.shape, dtype=bool)),
        lambda_=cfg.lambda_,
        iterations=len(history),
        final_delta=best_delta,
        converged=converged,
        history=history,
    )


def soft_impute(m: SeriesMatrix, cfg: SoftImputeConfig) -> SeriesMatrix:
    """Fill every masked cell; observed cells are returned bit-identical."""
    return soft_impute_run(m, cfg).matrix


def select_lambda(m: SeriesMatrix, grid: Sequence[float], holdout_fraction: float, seed: int,
                  cfg: Optional[SoftImputeConfig] = None) -> float:
    """Pick lambda from ``grid`` by RMSE on a seeded random holdout of observed cells.

    Ties go to the larger lambda.

    Raises:
        ValueError: If the grid is empty or holdout_fraction is outside (0, 0.5]
    """
    if not grid:
        raise ValueError("Lambda grid is empty")
    if not 0.0 < holdout_fraction <= 0.5:
        raise ValueError(f"Holdout fraction {holdout_fraction} outside (0, 0.5]")
    cfg = cfg or SoftImputeConfig()

    candidates = sorted(set(float(g) for g in grid))
    if len(candidates) == 1:
        return candidates[0]

    held_out, record = inject_random(m, holdout_fraction, seed)
    cells = record.cell_array()
    if len(cells) == 0:
        logger.warning("Holdout is empty; falling back to the largest lambda")
        return candidates[-1]
    truth = m.values[cells[:, 0], cells[:, 1]]

    best_lambda, best_error = None, np.inf
    for lambda_ in candidates:
        completed = soft_impute(held_out, cfg.model_copy(update={"lambda_": lambda_}))
        error = rmse(truth, completed.values[cells[:, 0], cells[:, 1]])
        logger.debug(f"lambda={lambda_:g}: holdout RMSE {error:.6f}")
        if error <= best_error:
            best_lambda, best_error = lambda_, error

    logger.info(f"Selected lambda {best_lambda:g} (holdout RMSE {best_error:.6f} on {len(cells)} cells)")
    return best_lambda
