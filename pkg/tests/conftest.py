"""Shared fixtures for gapdyn tests."""

import logging

import numpy as np
import pytest

from core import SeriesMatrix, Space

START_2016 = 403224


def make_matrix(values, mask=None, start=START_2016, station_ids=None, space=Space.RAW) -> SeriesMatrix:
    """Build a series from a nested list/array; NaN entries are masked unless a mask is given."""
    values = np.asarray(values, dtype=np.float64)
    if station_ids is None:
        station_ids = [f"S{j + 1}" for j in range(values.shape[1])]
    return SeriesMatrix(
        timestamps=np.arange(start, start + values.shape[0]),
        values=values,
        mask=mask,
        station_ids=station_ids,
        space=space,
    )


@pytest.fixture
def small_matrix():
    """4 hours x 3 stations with two gaps."""
    return make_matrix([
        [1.0, 2.0, 3.0],
        [2.0, np.nan, 4.0],
        [3.0, 4.0, 5.0],
        [np.nan, 5.0, 6.0],
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def build_matrix():
    """Factory fixture around make_matrix."""
    return make_matrix


@pytest.fixture(autouse=True)
def restore_root_logger():
    """setup_logging replaces the root handlers; put the originals back after each test."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
