"""Tests for per-station normalization."""

import numpy as np
import pytest

from core import Space
from ingest import (
    DegenerateStation, SpaceMismatch, NormParams, fit_normalization, normalize, denormalize
)


def test_fit_uses_observed_cells_only(small_matrix):
    """Test mean and sample std over observed cells."""
    p = fit_normalization(small_matrix)

    assert p.station_ids == ("S1", "S2", "S3")
    assert p.means.tolist() == pytest.approx([2.0, 11 / 3, 4.5])
    assert p.stds[0] == pytest.approx(1.0)
    assert p.fitted_on == small_matrix.span


def test_normalize_round_trip(rng, build_matrix):
    """Test that denormalize inverts normalize on observed cells."""
    values = rng.normal(30.0, 8.0, size=(50, 4))
    values[rng.random(values.shape) < 0.2] = np.nan
    m = build_matrix(values)
    p = fit_normalization(m)

    z = normalize(m, p)
    assert z.space == Space.NORMALIZED
    assert np.array_equal(z.mask, m.mask)
    observed = z.values[z.mask].reshape(-1)
    assert abs(observed.mean()) < 1.0

    back = denormalize(z, p)
    assert back.space == Space.RAW
    assert np.allclose(back.values[m.mask], m.values[m.mask], atol=1e-9)


def test_normalized_columns_are_standard(rng, build_matrix):
    """Test zero mean and unit sample std per station after normalizing."""
    m = build_matrix(rng.normal(10.0, 3.0, size=(200, 3)))
    z = normalize(m, fit_normalization(m))

    assert np.allclose(z.values.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z.values.std(axis=0, ddof=1), 1.0, atol=1e-12)


def test_degenerate_station(build_matrix):
    """Test stations with too few or identical observations."""
    with pytest.raises(DegenerateStation):
        fit_normalization(build_matrix([[1.0, 2.0], [np.nan, 3.0]]))
    with pytest.raises(DegenerateStation):
        fit_normalization(build_matrix([[5.0, 2.0], [5.0, 3.0]]))


def test_space_mismatch(small_matrix, build_matrix):
    """Test transforms applied in the wrong space or to other stations."""
    p = fit_normalization(small_matrix)
    z = normalize(small_matrix, p)

    with pytest.raises(SpaceMismatch):
        normalize(z, p)
    with pytest.raises(SpaceMismatch):
        denormalize(small_matrix, p)

    other = build_matrix(small_matrix.values.copy(), station_ids=["X", "Y", "Z"])
    with pytest.raises(SpaceMismatch):
        normalize(other, p)


def test_norm_params_json(small_matrix):
    """Test parameter serialization."""
    p = fit_normalization(small_matrix)
    loaded = NormParams.model_validate_json(p.model_dump_json())

    assert loaded == p
