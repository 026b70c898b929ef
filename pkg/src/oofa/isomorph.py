"""Frequency-pattern signatures and exact design-isomorphism testing.

Two designs are d-isomorphic when one maps onto the other by permuting runs,
relabeling components, and/or reversing every ordering (which flips all PWO
levels). The weaker wt comparison only matches the multiset of table types
(sorted cell-count patterns) over column pairs and triples; unequal
signatures prove non-d-isomorphism, and both strengths are needed because
strength-2-balanced designs can differ only in their triple tables.
"""
from __future__ import annotations

import hashlib
import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .perm import Design, n_pwo
from .reference import tuple_counts

#: Brute-force transformation scan cap: 2 * 7! = 10080 candidates.
MAX_ISOMORPH_M = 7


@dataclass(frozen=True)
class WtSignature:
    """Multisets of table types over all column pairs and triples."""

    m: int
    n_runs: int
    pair_types: tuple[tuple[tuple[int, ...], int], ...]
    triple_types: tuple[tuple[tuple[int, ...], int], ...]

    def digest(self) -> str:
        payload = repr((self.m, self.n_runs, self.pair_types, self.triple_types))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _type_multiset(matrix: np.ndarray, levels, t: int):
    counter: Counter[tuple[int, ...]] = Counter()
    for cols in itertools.combinations(range(matrix.shape[1]), t):
        tlv = tuple(levels[c] for c in cols)
        counts = tuple_counts(matrix, cols, tlv)
        counter[tuple(sorted(int(c) for c in counts))] += 1
    return tuple(sorted(counter.items()))


def wt_signature(design: Design) -> WtSignature:
    """Canonical frequency-pattern signature at strengths 2 and 3."""
    if design.m > MAX_ISOMORPH_M:
        raise ValidationError(f"wt signatures support m <= {MAX_ISOMORPH_M}")
    ext = design.extended_matrix()
    levels = design.extended_levels()
    return WtSignature(
        m=design.m,
        n_runs=design.n_runs,
        pair_types=_type_multiset(ext, levels, 2),
        triple_types=_type_multiset(ext, levels, 3),
    )


def _check_comparable(a: Design, b: Design) -> None:
    if a.m != b.m or a.n_runs != b.n_runs:
        raise ValidationError(
            f"designs are not comparable: ({a.m}, {a.n_runs}) vs ({b.m}, {b.n_runs})"
        )


def wt_isomorphic(a: Design, b: Design) -> bool:
    _check_comparable(a, b)
    return wt_signature(a) == wt_signature(b)


def _encode_rows(runs: np.ndarray, m: int) -> np.ndarray:
    code = np.zeros(runs.shape[0], dtype=np.int64)
    for k in range(m):
        code = code * m + runs[:, k]
    return code


def canonical_form(design: Design) -> tuple[int, ...]:
    """Minimum, over all 2 * m! relabel/reversal transformations, of the
    sorted row codes. Equal canonical forms characterize d-isomorphism."""
    if design.m > MAX_ISOMORPH_M:
        raise ValidationError(f"canonical forms support m <= {MAX_ISOMORPH_M}")
    if design.process is not None:
        raise ValidationError("canonical forms are defined for ordering-only designs")
    m = design.m
    runs = design.runs
    best: tuple[int, ...] | None = None
    for sigma in itertools.permutations(range(m)):
        relabeled = np.asarray(sigma, dtype=np.int64)[runs]
        for rev in (False, True):
            cand = relabeled[:, ::-1] if rev else relabeled
            key = tuple(sorted(_encode_rows(cand, m).tolist()))
            if best is None or key < best:
                best = key
    return best


def d_isomorphic(a: Design, b: Design) -> bool:
    """Exact test: some component relabeling plus optional global reversal
    maps one design's run multiset onto the other's."""
    _check_comparable(a, b)
    if wt_signature(a) != wt_signature(b):
        return False
    return canonical_form(a) == canonical_form(b)
