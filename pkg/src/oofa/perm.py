"""Permutation arithmetic, lexicographic indexing, and pair-wise-ordering expansion.

A run is a permutation of the component labels 0..m-1; position k holds the
component added at stage k. The pair-wise-ordering (PWO) expansion maps a run
to m' = m(m-1)/2 binary factors, one per component pair (k, l) with k < l,
equal to 1 exactly when k is added before l. PWO columns are ordered
(0,1), (0,2), ..., (0,m-1), (1,2), ..., (m-2,m-1).
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

#: Full enumeration guard; 8! = 40320 rows. Raise via the max_m argument if needed.
MAX_COMPONENTS_DEFAULT = 8


@lru_cache(maxsize=32)
def pwo_columns(m: int) -> tuple[tuple[int, int], ...]:
    """Component pairs (k, l), k < l, in the fixed column order."""
    return tuple((k, l) for k in range(m) for l in range(k + 1, m))


def n_pwo(m: int) -> int:
    return m * (m - 1) // 2


def check_permutation(labels: Sequence[int], m: int | None = None) -> np.ndarray:
    """Validate one run and return it as an int array."""
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValidationError(f"a run needs at least 2 components, got {arr!r}")
    mm = m if m is not None else arr.size
    if arr.size != mm or sorted(arr.tolist()) != list(range(mm)):
        raise ValidationError(
            f"run {arr.tolist()} is not a permutation of 0..{mm - 1}"
        )
    return arr


def unrank(m: int, index: int) -> tuple[int, ...]:
    """The index-th permutation of 0..m-1 in lexicographic order (1-based)."""
    if m < 2:
        raise ValidationError(f"need m >= 2, got {m}")
    total = math.factorial(m)
    if not 1 <= index <= total:
        raise ValidationError(
            f"index {index} out of range: valid range is 1..{total} for m={m}"
        )
    rem = index - 1
    avail = list(range(m))
    out = []
    for k in range(m, 0, -1):
        f = math.factorial(k - 1)
        q, rem = divmod(rem, f)
        out.append(avail.pop(q))
    return tuple(out)


def rank(labels: Sequence[int]) -> int:
    """1-based lexicographic index of a permutation; inverse of unrank."""
    arr = check_permutation(labels)
    m = arr.size
    avail = list(range(m))
    idx = 0
    for k, v in enumerate(arr.tolist()):
        pos = avail.index(v)
        idx += pos * math.factorial(m - k - 1)
        avail.pop(pos)
    return idx + 1


def pwo_row(labels: Sequence[int]) -> np.ndarray:
    """Binary PWO levels of one run, length m(m-1)/2."""
    arr = check_permutation(labels)
    return _pwo_from_runs(arr[None, :])[0]


def _pwo_from_runs(runs: np.ndarray) -> np.ndarray:
    """Vectorized PWO expansion of an (N, m) run matrix."""
    m = runs.shape[1]
    pos = np.argsort(runs, axis=1)  # pos[i, c] = stage of component c in run i
    cols = pwo_columns(m)
    ks = np.fromiter((k for k, _ in cols), dtype=np.int64)
    ls = np.fromiter((l for _, l in cols), dtype=np.int64)
    return (pos[:, ks] < pos[:, ls]).astype(np.int8)


def permutation_from_pwo(row: Sequence[int], m: int) -> tuple[int, ...]:
    """Recover the unique run realizing a full PWO row.

    Component c precedes exactly (number of 1 wins) others, so sorting by
    win count descending recovers the addition order. Raises if the row is
    not transitively realizable.
    """
    row = np.asarray(row, dtype=np.int64)
    if row.size != n_pwo(m):
        raise ValidationError(f"PWO row length {row.size} != {n_pwo(m)} for m={m}")
    wins = np.zeros(m, dtype=np.int64)
    for (k, l), v in zip(pwo_columns(m), row.tolist()):
        if v not in (0, 1):
            raise ValidationError(f"PWO levels must be 0/1, got {v}")
        wins[k if v == 1 else l] += 1
    order = tuple(int(c) for c in np.argsort(-wins, kind="stable"))
    if sorted(wins.tolist()) != list(range(m)):
        raise ValidationError("PWO row is not realizable by any permutation")
    if not np.array_equal(pwo_row(order), row):
        raise ValidationError("PWO row is not realizable by any permutation")
    return order


class Design:
    """An N x m matrix of runs, optionally augmented with process-factor levels.

    Row order is preserved for file round-trips; none of the criteria depend
    on it. ``process`` is an (N, p) matrix of level codes 0..s_k-1 with level
    counts ``process_levels``.
    """

    def __init__(
        self,
        runs: Iterable[Sequence[int]] | np.ndarray,
        m: int | None = None,
        process: np.ndarray | None = None,
        process_levels: Sequence[int] = (),
    ):
        arr = np.asarray(runs, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValidationError("a design needs at least one run")
        if m is not None and arr.shape[1] != m:
            raise ValidationError(f"runs have {arr.shape[1]} columns, expected m={m}")
        for row in arr:
            check_permutation(row, arr.shape[1])
        self.m = arr.shape[1]
        self.runs = arr
        self.runs.setflags(write=False)
        levels = tuple(int(s) for s in process_levels)
        if process is None:
            if levels:
                raise ValidationError("process_levels given without process columns")
            self.process = None
        else:
            proc = np.asarray(process, dtype=np.int64)
            if proc.ndim != 2 or proc.shape[0] != arr.shape[0]:
                raise ValidationError("process matrix must have one row per run")
            if len(levels) != proc.shape[1]:
                raise ValidationError("one level count per process column required")
            for j, s in enumerate(levels):
                if s < 2:
                    raise ValidationError(f"process factor {j} needs >= 2 levels")
                if proc[:, j].min() < 0 or proc[:, j].max() >= s:
                    raise ValidationError(f"process factor {j} has levels outside 0..{s - 1}")
            self.process = proc
            self.process.setflags(write=False)
        self.process_levels = levels
        self._pwo: np.ndarray | None = None

    @property
    def n_runs(self) -> int:
        return self.runs.shape[0]

    @property
    def n_process(self) -> int:
        return 0 if self.process is None else self.process.shape[1]

    def pwo_matrix(self) -> np.ndarray:
        """The N x m' PWO expansion (cached, read-only)."""
        if self._pwo is None:
            self._pwo = _pwo_from_runs(self.runs)
            self._pwo.setflags(write=False)
        return self._pwo

    def extended_matrix(self) -> np.ndarray:
        """PWO columns followed by process columns."""
        if self.process is None:
            return self.pwo_matrix()
        return np.hstack([self.pwo_matrix(), self.process.astype(np.int8)])

    def extended_levels(self) -> tuple[int, ...]:
        return (2,) * n_pwo(self.m) + self.process_levels

    def row_ranks(self) -> list[int]:
        """1-based lexicographic index of each run."""
        return [rank(r) for r in self.runs]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Design):
            return NotImplemented
        if self.m != other.m or self.process_levels != other.process_levels:
            return False
        if not np.array_equal(self.runs, other.runs):
            return False
        if (self.process is None) != (other.process is None):
            return False
        return self.process is None or np.array_equal(self.process, other.process)

    def __repr__(self) -> str:
        extra = f", process={self.process_levels}" if self.process_levels else ""
        return f"Design(m={self.m}, n_runs={self.n_runs}{extra})"


def design_from_rows(m: int, rows: Sequence[int]) -> Design:
    """Design from 1-based lexicographic row indices of the full design."""
    return Design([unrank(m, r) for r in rows], m=m)


def full_design(m: int, max_m: int = MAX_COMPONENTS_DEFAULT) -> Design:
    """All m! runs in lexicographic order."""
    if not 2 <= m <= max_m:
        raise ValidationError(
            f"m={m} outside supported range 2..{max_m} (raise max_m to override)"
        )
    return Design(_full_runs(m), m=m)


@lru_cache(maxsize=16)
def _full_runs(m: int) -> np.ndarray:
    arr = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=16)
def full_pwo(m: int) -> np.ndarray:
    """PWO expansion of the full design (cached)."""
    p = _pwo_from_runs(_full_runs(m))
    p.setflags(write=False)
    return p


def expand(design: Design) -> np.ndarray:
    """PWO design matrix of a design; row i is pwo_row(run i)."""
    return design.pwo_matrix()


def drop_component(runs: np.ndarray, c: int) -> np.ndarray:
    """Remove component c from every run and relabel survivors by rank order."""
    m = runs.shape[1]
    kept = runs[runs != c].reshape(runs.shape[0], m - 1)
    relabel = np.zeros(m, dtype=np.int64)
    for new, old in enumerate(x for x in range(m) if x != c):
        relabel[old] = new
    return relabel[kept]


def leave_one_out(design: Design, c: int) -> Design:
    """Drop component c, preserving relative order and run count."""
    if not 0 <= c < design.m:
        raise ValidationError(f"component {c} not in 0..{design.m - 1}")
    if design.m < 3:
        raise ValidationError("leave-one-out needs m >= 3")
    return Design(
        drop_component(design.runs, c),
        m=design.m - 1,
        process=design.process,
        process_levels=design.process_levels,
    )
