"""Expected-frequency tables for column tuples under a candidate set.

For a t-tuple of extended columns, the reference table counts every level
combination over the candidate set's reference pool. Pair tables of the full
unrestricted pool come in three structural shapes: synergistic (the shared
component is added before both partners or after both), antagonistic (the
shared component switches roles), and independent (disjoint component pairs).
Synergistic and antagonistic tables carry the same sorted cell counts, so
they merge into one table type under frequency-pattern comparison.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .candidates import CandidateSet, full_candidates
from .errors import ValidationError
from .perm import pwo_columns


@dataclass(frozen=True)
class TableType:
    """Frequency pattern of a table: cell counts sorted ascending.

    Invariant under level relabeling and column permutation, which is exactly
    the weak table-isomorphism used to compare designs.
    """

    signature: tuple[int, ...]


@dataclass(frozen=True)
class ReferenceTable:
    """Counts of each level combination over a candidate pool.

    ``counts`` is flattened in mixed-radix order over ``levels``; cells with
    count 0 are structural zeros (no admissible run realizes them) and are
    skipped by the chi-square measure.
    """

    columns: tuple[int, ...]
    levels: tuple[int, ...]
    counts: np.ndarray
    total: int

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.levels))

    def table_type(self) -> TableType:
        return TableType(tuple(sorted(int(c) for c in self.counts)))


def tuple_counts(matrix: np.ndarray, cols: Sequence[int], levels: Sequence[int]) -> np.ndarray:
    """Flattened contingency counts of the given columns over matrix rows."""
    code = np.zeros(matrix.shape[0], dtype=np.int64)
    for c, s in zip(cols, levels):
        code = code * s + matrix[:, c]
    return np.bincount(code, minlength=int(np.prod(levels)))


def reference_counts(cands: CandidateSet, cols: Sequence[int]) -> ReferenceTable:
    """Exact reference table for a column tuple, cached per candidate set."""
    cols = tuple(int(c) for c in cols)
    if len(set(cols)) != len(cols):
        raise ValidationError(f"columns must be distinct, got {cols}")
    ncol = cands.n_columns
    for c in cols:
        if not 0 <= c < ncol:
            raise ValidationError(f"column {c} out of range 0..{ncol - 1}")
    ref = cands.reference
    cache = ref._table_cache
    got = cache.get(cols)
    if got is None:
        all_levels = ref.extended_levels()
        levels = tuple(all_levels[c] for c in cols)
        counts = tuple_counts(ref.extended_matrix(), cols, levels)
        counts.setflags(write=False)
        got = ReferenceTable(cols, levels, counts, ref.n_rows)
        cache[cols] = got
    return got


def pair_structure(m: int, c1: int, c2: int) -> str:
    """Structural kind of a PWO column pair: synergistic, antagonistic, independent."""
    cols = pwo_columns(m)
    (a, b), (c, d) = cols[c1], cols[c2]
    shared = {a, b} & {c, d}
    if not shared:
        return "independent"
    x = shared.pop()
    before_both = (x == a and x == c) or (x == b and x == d)
    return "synergistic" if before_both else "antagonistic"


def classify_pair_structure(m: int) -> dict[str, int]:
    """Counts of synergistic/antagonistic/independent pairs over all C(m',2)."""
    if m < 3:
        raise ValidationError("pair classification needs m >= 3")
    cnt = Counter(
        pair_structure(m, i, j)
        for i, j in itertools.combinations(range(len(pwo_columns(m))), 2)
    )
    return {k: cnt.get(k, 0) for k in ("synergistic", "antagonistic", "independent")}


def classify_pairs(m: int) -> dict[TableType, int]:
    """Frequencies of pair table types over the full unrestricted candidate set."""
    if m < 3:
        raise ValidationError("pair classification needs m >= 3")
    cands = full_candidates(m)
    out: Counter[TableType] = Counter()
    for i, j in itertools.combinations(range(cands.n_columns), 2):
        out[reference_counts(cands, (i, j)).table_type()] += 1
    return dict(out)


def classify_tuples(cands: CandidateSet, t: int) -> dict[TableType, int]:
    """Table-type frequencies over all t-tuples of a candidate set's reference pool."""
    if t not in (2, 3):
        raise ValidationError(f"strength must be 2 or 3, got {t}")
    out: Counter[TableType] = Counter()
    for cols in itertools.combinations(range(cands.n_columns), t):
        out[reference_counts(cands, cols).table_type()] += 1
    return dict(out)


def admissible_min_N(cands: CandidateSet, t: int) -> int:
    """Smallest N >= 1 making every expected count N*E/M an integer.

    Balanced run sizes are exactly the multiples of this value, a necessary
    condition for exact strength-t balance over the candidate set.
    """
    if t not in (2, 3):
        raise ValidationError(f"strength must be 2 or 3, got {t}")
    M = cands.reference.n_rows
    need = 1
    for cols in itertools.combinations(range(cands.n_columns), t):
        for E in reference_counts(cands, cols).counts:
            E = int(E)
            if E:
                need = math.lcm(need, M // math.gcd(E, M))
    return need
