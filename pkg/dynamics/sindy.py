"""Sparse discrete-time dynamics: x[t+1] = Theta(x[t]) Xi.

The model is fitted by sequentially thresholded least squares on consecutive
fully observed hours of a training period, then used to refine imputed cells
with one-step predictions.
"""

import logging
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from core import GapDynError, SeriesMatrix, Space, as_cell_array
from ingest.normalization import NormParams, normalize, denormalize
from .library import LibrarySpec, build_library, term_names

logger = logging.getLogger(__name__)


class RankDeficient(GapDynError):
    """The active-set normal equations are singular."""
    pass


class InsufficientPairs(GapDynError):
    """Too few consecutive fully observed hours to fit the library."""
    pass


class ShapeMismatch(GapDynError):
    """Model and series disagree on station count."""
    pass


class SindyDiagnostics(BaseModel):
    n_pairs: int
    train_rmse: Dict[str, float]
    nonzero_terms: Dict[str, int]
    active_terms: Dict[str, List[str]] = Field(default_factory=dict)


class SindyModel(BaseModel):
    """Library descriptor plus sparse L x S coefficient matrix (row-major)."""

    stations: Tuple[str, ...]
    degree: int = Field(ge=1)
    include_constant: bool = True
    threshold: float = Field(ge=0.0)
    ridge: float = Field(ge=0.0)
    xi: List[List[float]]
    diagnostics: Optional[SindyDiagnostics] = None
    normalization: Optional[NormParams] = None

    @model_validator(mode="after")
    def check_coefficients(self) -> "SindyModel":
        n_terms, n_stations = self.library.n_terms(len(self.stations)), len(self.stations)
        if len(self.xi) != n_terms or any(len(row) != n_stations for row in self.xi):
            raise ValueError(f"xi must be {n_terms} x {n_stations}")
        xi = np.asarray(self.xi, dtype=np.float64)
        nonzero = np.abs(xi[xi != 0])
        if nonzero.size and nonzero.min() < self.threshold:
            raise ValueError(f"Nonzero coefficient {nonzero.min()} below threshold {self.threshold}")
        return self

    @property
    def library(self) -> LibrarySpec:
        return LibrarySpec(degree=self.degree, include_constant=self.include_constant)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def xi_array(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=np.float64)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, data: Union[str, bytes]) -> "SindyModel":
        return cls.model_validate_json(data)


def _solve_active(theta: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    gram = theta.T @ theta + ridge * np.eye(theta.shape[1])
    if np.linalg.matrix_rank(gram) < theta.shape[1]:
        raise RankDeficient(f"Normal system over {theta.shape[1]} active terms is singular (ridge={ridge})")
    return np.linalg.solve(gram, theta.T @ y)


def stlsq(theta: np.ndarray, targets: np.ndarray, threshold: float, ridge: float,
          max_rounds: int = 20) -> np.ndarray:
    """Sequentially thresholded (ridge) least squares, one target column at a time.

    Each round zeroes coefficients below ``threshold`` and refits the
    survivors; rounds stop when the support is stable or after ``max_rounds``.
    Every nonzero coefficient of the result has magnitude >= threshold.

    Raises:
        RankDeficient: If an active-set normal system is singular
    """
    theta = np.asarray(theta, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(theta.shape[0], -1)
    n_terms, n_targets = theta.shape[1], targets.shape[1]
    xi = np.zeros((n_terms, n_targets))

    for j in range(n_targets):
        active = np.ones(n_terms, dtype=bool)
        coef = np.zeros(n_terms)
        coef[active] = _solve_active(theta[:, active], targets[:, j], ridge)
        for _ in range(max_rounds):
            survivors = active & (np.abs(coef) >= threshold)
            if np.array_equal(survivors, active):
                break
            active = survivors
            coef = np.zeros(n_terms)
            if not active.any():
                break
            coef[active] = _solve_active(theta[:, active], targets[:, j], ridge)
        coef[np.abs(coef) < threshold] = 0.0
        xi[:, j] = coef

    return xi


def usable_pairs(m: SeriesMatrix) -> np.ndarray:
    """Rows t where both t and t+1 are fully observed."""
    complete = m.mask.all(axis=1)
    return np.flatnonzero(complete[:-1] & complete[1:])


def fit(train: SeriesMatrix, spec: LibrarySpec, threshold: float = 0.05, ridge: float = 1e-6,
        max_rounds: int = 20) -> SindyModel:
    """Fit the one-step map on consecutive fully observed training hours.

    Raises:
        InsufficientPairs: If fewer usable pairs than library terms
        RankDeficient: Propagated from stlsq
    """
    if train.space != Space.NORMALIZED:
        logger.warning(f"Fitting dynamics on a {train.space.value} series; normalized input is expected")

    n_terms = spec.n_terms(train.n_stations)
    rows = usable_pairs(train) if train.n_rows > 1 else np.empty(0, dtype=np.int64)
    if len(rows) < n_terms:
        raise InsufficientPairs(f"{len(rows)} usable consecutive pairs for {n_terms} library terms")

    theta = build_library(train.values[rows], spec)
    targets = train.values[rows + 1]
    xi = stlsq(theta, targets, threshold, ridge, max_rounds)

    residual = targets - theta @ xi
    names = term_names(spec, train.station_ids)
    diagnostics = SindyDiagnostics(
        n_pairs=len(rows),
        train_rmse={s: float(np.sqrt(np.mean(residual[:, j] ** 2))) for j, s in enumerate(train.station_ids)},
        nonzero_terms={s: int(np.count_nonzero(xi[:, j])) for j, s in enumerate(train.station_ids)},
        active_terms={s: [names[i] for i in np.flatnonzero(xi[:, j])] for j, s in enumerate(train.station_ids)},
    )
    logger.info(f"Fitted dynamics on {len(rows)} pairs: {int(np.count_nonzero(xi))} of {xi.size} coefficients active")

    return SindyModel(
        stations=train.station_ids,
        degree=spec.degree,
        include_constant=spec.include_constant,
        threshold=threshold,
        ridge=ridge,
        xi=xi.tolist(),
        diagnostics=diagnostics,
    )


def predict_one_step(model: SindyModel, state) -> np.ndarray:
    state = np.asarray(state, dtype=np.float64).reshape(1, -1)
    if state.shape[1] != model.n_stations:
        raise ShapeMismatch(f"State has {state.shape[1]} entries, model has {model.n_stations} stations")
    return (build_library(state, model.library) @ model.xi_array)[0]


def refine_imputation(model: SindyModel, imputed: SeriesMatrix, missing_cells,
                      passes: int = 1) -> SeriesMatrix:
    """Overwrite missing cells with one-step predictions in a forward pass.

    Cell (t, s) takes component s of the prediction from row t-1 as already
    refined. Row 0 has no predecessor and keeps its imputed values; cells not
    listed are never touched.

    Raises:
        ShapeMismatch: If the model's station count differs from the series
    """
    if model.n_stations != imputed.n_stations:
        raise ShapeMismatch(f"Model has {model.n_stations} stations, series has {imputed.n_stations}")
    if model.stations != imputed.station_ids:
        logger.warning(f"Model stations {list(model.stations)} differ from series {list(imputed.station_ids)}")
    if not imputed.is_complete:
        raise ValueError("refine_imputation needs a fully imputed series")

    cells = as_cell_array(missing_cells)
    if len(cells) == 0:
        return imputed

    missing = np.zeros(imputed.shape, dtype=bool)
    missing[cells[:, 0], cells[:, 1]] = True
    rows = np.flatnonzero(missing[1:].any(axis=1)) + 1

    values = imputed.values.copy()
    xi, spec = model.xi_array, model.library
    for _ in range(passes):
        for t in rows:
            prediction = build_library(values[t - 1:t], spec)[0] @ xi
            values[t, missing[t]] = prediction[missing[t]]

    logger.debug(f"Refined {int(missing[1:].sum())} cells over {len(rows)} rows")
    return imputed.with_values(values, mask=np.ones(imputed.shape, dtype=bool))


def predict_series(model: SindyModel, m: SeriesMatrix) -> SeriesMatrix:
    """One-step prediction for each fully observed row, stamped one hour later.

    Rows with a masked cell give a masked prediction row. A model carrying
    normalization parameters is applied to raw series in normalized space.
    """
    if model.n_stations != m.n_stations:
        raise ShapeMismatch(f"Model has {model.n_stations} stations, series has {m.n_stations}")

    scale = model.normalization if m.space == Space.RAW else None
    states = normalize(m, scale) if scale else m

    complete = states.mask.all(axis=1)
    predictions = np.full(m.shape, np.nan)
    if complete.any():
        predictions[complete] = build_library(states.values[complete], model.library) @ model.xi_array

    shifted = SeriesMatrix(
        timestamps=m.timestamps + 1,
        values=predictions,
        mask=np.repeat(complete[:, None], m.n_stations, axis=1),
        station_ids=m.station_ids,
        space=states.space,
    )
    return denormalize(shifted, scale) if scale else shifted
