"""Seeded synthetic missingness: random cells and single-station outage blocks."""

import logging
import math
from typing import Tuple

import numpy as np

from core import (
    GapDynError, SeriesMatrix, InjectionRecord,
    RandomRegime, BlockRegime, MixedRegime
)

logger = logging.getLogger(__name__)

# Random placements tried per block before falling back to the free-run search.
BLOCK_PLACEMENT_ATTEMPTS = 100


class Unsatisfiable(GapDynError):
    """The requested injection cannot be realized on this series."""
    pass


def target_count(fraction: float, observed: int) -> int:
    """round(fraction * observed), halves rounded up."""
    return int(math.floor(fraction * observed + 0.5))


def _check_fraction(fraction: float) -> None:
    if not 0.0 <= fraction <= 1.0:
        raise Unsatisfiable(f"Fraction {fraction} outside [0, 1]")


def _check_lengths(min_len: int, max_len: int, n_rows: int) -> None:
    if not 1 <= min_len <= max_len <= n_rows:
        raise ValueError(f"Block lengths need 1 <= min_len ({min_len}) <= max_len ({max_len}) <= rows ({n_rows})")


def _draw_random(working: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    observed = np.argwhere(working)
    picked = observed[np.sort(rng.choice(len(observed), size=count, replace=False))]
    working[picked[:, 0], picked[:, 1]] = False
    return picked


def _free_runs(available: np.ndarray, shortest: int) -> np.ndarray:
    """(station, start, length) of every run of available cells at least ``shortest`` long."""
    runs = []
    for station in range(available.shape[1]):
        edges = np.diff(np.concatenate([[0], available[:, station].astype(np.int8), [0]]))
        starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
        keep = ends - starts >= shortest
        runs.append(np.column_stack([np.full(keep.sum(), station), starts[keep], (ends - starts)[keep]]))
    return np.concatenate(runs) if runs else np.empty((0, 3), dtype=np.int64)


def _draw_blocks(working: np.ndarray, count: int, min_len: int, max_len: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Mask ``count`` observed cells of ``working`` in single-station runs.

    A block only covers cells that are still observed and not adjacent to an
    earlier block, so blocks never merge. After BLOCK_PLACEMENT_ATTEMPTS random
    placements fail, the block starts at the head of a free run: one at least
    as long as the drawn length if any exists, otherwise the longest free run
    of at least ``min_len`` cells. Only the last block may be shorter than
    ``min_len``, cut to land exactly on ``count``.

    Raises:
        Unsatisfiable: If no free run can hold another block
    """
    n_rows, n_stations = working.shape
    injected = np.zeros_like(working)
    taken = []
    remaining = count

    while remaining > 0:
        want = min(int(rng.integers(min_len, max_len + 1)), remaining)
        available = working.copy()
        available[1:] &= ~injected[:-1]
        available[:-1] &= ~injected[1:]

        placed = None
        for _ in range(BLOCK_PLACEMENT_ATTEMPTS):
            station = int(rng.integers(n_stations))
            start = int(rng.integers(n_rows - want + 1))
            if available[start:start + want, station].all():
                placed = (station, start, want)
                break

        if placed is None:
            runs = _free_runs(available, min(min_len, remaining))
            if not len(runs):
                raise Unsatisfiable(f"No free run of {min(min_len, remaining)} hours left for "
                                    f"{remaining} more block cells")
            fitting = runs[runs[:, 2] >= want]
            if len(fitting):
                station, start, run_len = fitting[int(rng.integers(len(fitting)))]
                # A run short enough to be one block is taken whole
                length = min(run_len, remaining) if run_len <= max_len else want
            else:
                station, start, run_len = runs[int(np.argmax(runs[:, 2]))]
                length = min(run_len, remaining)
            placed = (int(station), int(start), int(length))
            logger.debug(f"No random block placement found; using the free run at row {start}, station {station}")

        station, start, length = placed
        rows = np.arange(start, start + length)
        working[rows, station] = False
        injected[rows, station] = True
        taken.append(np.column_stack([rows, np.full(length, station)]))
        remaining -= length

    if not taken:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(taken)


def _finish(m: SeriesMatrix, cells: np.ndarray, seed: int, regime) -> Tuple[SeriesMatrix, InjectionRecord]:
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    if len(cells):
        cells = cells[np.lexsort((cells[:, 1], cells[:, 0]))]
    record = InjectionRecord(seed=seed, regime=regime, cells=[(int(r), int(s)) for r, s in cells])
    logger.debug(f"Injected {len(cells)} cells ({regime.kind}, fraction {regime.fraction}, seed {seed})")
    return m.mask_cells(cells), record


def inject_random(m: SeriesMatrix, fraction: float, seed: int) -> Tuple[SeriesMatrix, InjectionRecord]:
    """Mask exactly round(fraction * observed) observed cells, uniformly without replacement.

    Raises:
        Unsatisfiable: If fraction is outside [0, 1]
    """
    _check_fraction(fraction)
    rng = np.random.default_rng(seed)
    working = m.mask.copy()
    cells = _draw_random(working, target_count(fraction, m.observed_count()), rng)
    return _finish(m, cells, seed, RandomRegime(fraction=fraction))


def inject_blocks(m: SeriesMatrix, fraction: float, min_len: int, max_len: int,
                  seed: int) -> Tuple[SeriesMatrix, InjectionRecord]:
    """Mask exactly round(fraction * observed) observed cells in contiguous per-station runs.

    Block lengths are uniform integers in [min_len, max_len]; only the final
    block may be shorter.

    Raises:
        Unsatisfiable: If the target count exceeds the observed count, or the
            remaining free runs cannot hold another block
        ValueError: If the block lengths are invalid for this series
    """
    _check_lengths(min_len, max_len, m.n_rows)
    observed = m.observed_count()
    target = target_count(fraction, observed)
    if fraction < 0 or target > observed:
        raise Unsatisfiable(f"Cannot inject {target} cells into {observed} observed cells")

    rng = np.random.default_rng(seed)
    cells = _draw_blocks(m.mask.copy(), target, min_len, max_len, rng)
    return _finish(m, cells, seed, BlockRegime(fraction=fraction, min_len=min_len, max_len=max_len))


def inject_mixed(m: SeriesMatrix, fraction: float, block_share: float, min_len: int, max_len: int,
                 seed: int) -> Tuple[SeriesMatrix, InjectionRecord]:
    """Combined regime: block_share of the budget as blocks, the rest as random cells.

    Raises:
        Unsatisfiable: If fraction is outside [0, 1] or the blocks cannot be packed
        ValueError: If block_share or the block lengths are invalid
    """
    _check_fraction(fraction)
    if not 0.0 <= block_share <= 1.0:
        raise ValueError(f"block_share {block_share} outside [0, 1]")
    _check_lengths(min_len, max_len, m.n_rows)

    total = target_count(fraction, m.observed_count())
    n_block = target_count(block_share, total)
    rng = np.random.default_rng(seed)
    working = m.mask.copy()
    blocks = _draw_blocks(working, n_block, min_len, max_len, rng)
    scattered = _draw_random(working, total - n_block, rng)
    regime = MixedRegime(fraction=fraction, block_share=block_share, min_len=min_len, max_len=max_len)
    return _finish(m, np.concatenate([blocks, scattered]), seed, regime)
