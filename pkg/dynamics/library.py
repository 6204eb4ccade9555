"""Polynomial candidate library for sparse dynamics regression."""

from itertools import combinations_with_replacement
from math import comb
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field


class LibrarySpec(BaseModel):
    """Monomials up to ``degree`` in graded-lexicographic order."""

    degree: int = Field(2, ge=1)
    include_constant: bool = True

    def n_terms(self, n_states: int) -> int:
        total = comb(n_states + self.degree, self.degree)
        return total if self.include_constant else total - 1

    def exponents(self, n_states: int) -> List[Tuple[int, ...]]:
        """Each term as the tuple of state indices it multiplies (empty tuple = constant)."""
        terms = [()] if self.include_constant else []
        for d in range(1, self.degree + 1):
            terms.extend(combinations_with_replacement(range(n_states), d))
        return terms


def build_library(states: np.ndarray, spec: LibrarySpec) -> np.ndarray:
    """Evaluate every library term on each state row: N x S -> N x L."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    columns = []
    for term in spec.exponents(states.shape[1]):
        if term:
            columns.append(np.prod(states[:, list(term)], axis=1))
        else:
            columns.append(np.ones(states.shape[0]))
    return np.column_stack(columns)


def term_names(spec: LibrarySpec, station_ids: Sequence[str]) -> List[str]:
    names = []
    for term in spec.exponents(len(station_ids)):
        if not term:
            names.append("1")
            continue
        parts = []
        for index in sorted(set(term)):
            power = term.count(index)
            parts.append(station_ids[index] if power == 1 else f"{station_ids[index]}^{power}")
        names.append("*".join(parts))
    return names
