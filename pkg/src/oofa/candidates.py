"""Candidate sets: full, restricted by ordering constraints, or crossed with
process factors.

A candidate set carries two row pools:

* the *search pool* (``orders``/``proc``): the admissible runs a search may
  pick from. Supplying ``base`` shrinks this pool to the base design's runs.
* the *reference pool* (``reference``): the enumeration that defines expected
  frequencies for balance certification. Ordering constraints and explicit
  process fractions restrict it; a base design does not.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnsatisfiableConstraintError, ValidationError
from .perm import (
    Design,
    MAX_COMPONENTS_DEFAULT,
    _full_runs,
    _pwo_from_runs,
    drop_component,
    n_pwo,
)


@dataclass(frozen=True)
class Constraint:
    """Precedence restriction on component ordering.

    kind "precedes": components (a, b) with a added before b.
    kind "chain": components (a, b, c, ...) added in that relative order.
    """

    kind: str
    components: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("precedes", "chain"):
            raise ValidationError(f"unknown constraint kind {self.kind!r}")
        need = 2 if self.kind == "precedes" else 2
        if len(self.components) < need:
            raise ValidationError(f"{self.kind} needs >= {need} components")
        if self.kind == "precedes" and len(self.components) != 2:
            raise ValidationError("precedes takes exactly 2 components")
        if len(set(self.components)) != len(self.components):
            raise ValidationError("constraint components must be distinct")

    @staticmethod
    def parse(spec: Sequence) -> "Constraint":
        """From a JSON-style list like ["precedes", 0, 1] or ["chain", 0, 1, 2]."""
        if not spec:
            raise ValidationError("empty constraint spec")
        return Constraint(str(spec[0]), tuple(int(x) for x in spec[1:]))

    def pairs(self) -> list[tuple[int, int]]:
        """The implied (before, after) pairs."""
        if self.kind == "precedes":
            return [tuple(self.components)]
        return list(itertools.pairwise(self.components))

    def project(self, dropped: int) -> "Constraint | None":
        """Constraint after removing a component and relabeling survivors."""
        kept = [c for c in self.components if c != dropped]
        if len(kept) < 2:
            return None
        relabeled = tuple(c - 1 if c > dropped else c for c in kept)
        kind = "precedes" if len(relabeled) == 2 else self.kind
        return Constraint(kind, relabeled)


@dataclass(frozen=True)
class ProcessFactorSpec:
    """Process factors crossed with the ordering: (name, level count) pairs,
    optionally restricted to an explicit fraction of level combinations."""

    factors: tuple[tuple[str, int], ...]
    fraction: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        for name, s in self.factors:
            if s < 2:
                raise ValidationError(f"process factor {name!r} needs >= 2 levels")
        if self.fraction is not None:
            rows = set()
            for combo in self.fraction:
                if len(combo) != len(self.factors):
                    raise ValidationError("fraction row length must match factor count")
                for (name, s), lvl in zip(self.factors, combo):
                    if not 0 <= lvl < s:
                        raise ValidationError(
                            f"level {lvl} out of range for factor {name!r}"
                        )
                if combo in rows:
                    raise ValidationError(f"duplicate fraction row {combo}")
                rows.add(combo)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(s for _, s in self.factors)

    def combos(self) -> np.ndarray:
        """Allowed level combinations, full grid unless a fraction is given."""
        if self.fraction is not None:
            return np.asarray(self.fraction, dtype=np.int64)
        return np.array(
            list(itertools.product(*[range(s) for s in self.levels])), dtype=np.int64
        )

    @staticmethod
    def parse(obj: dict) -> "ProcessFactorSpec":
        factors = tuple((str(n), int(s)) for n, s in obj["factors"])
        frac = obj.get("fraction")
        fraction = None if frac is None else tuple(tuple(int(x) for x in row) for row in frac)
        return ProcessFactorSpec(factors, fraction)


def _satisfies(runs: np.ndarray, constraints: Sequence[Constraint]) -> np.ndarray:
    pos = np.argsort(runs, axis=1)
    mask = np.ones(runs.shape[0], dtype=bool)
    for con in constraints:
        for a, b in con.pairs():
            if not (0 <= a < runs.shape[1] and 0 <= b < runs.shape[1]):
                raise ValidationError(f"constraint uses component outside 0..{runs.shape[1] - 1}")
            mask &= pos[:, a] < pos[:, b]
    return mask


class CandidateSet:
    """Admissible runs plus the reference enumeration for expected frequencies."""

    def __init__(
        self,
        m: int,
        orders: np.ndarray,
        proc: np.ndarray | None,
        levels: tuple[int, ...],
        constraints: tuple[Constraint, ...],
        reference: "CandidateSet | None",
    ):
        self.m = m
        self.orders = orders
        self.proc = proc
        self.process_levels = levels
        self.constraints = constraints
        self._reference = reference
        self._extended: np.ndarray | None = None
        self._table_cache: dict = {}
        orders.setflags(write=False)
        if proc is not None:
            proc.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.orders.shape[0]

    @property
    def n_process(self) -> int:
        return 0 if self.proc is None else self.proc.shape[1]

    @property
    def n_columns(self) -> int:
        return n_pwo(self.m) + self.n_process

    @property
    def reference(self) -> "CandidateSet":
        """Pool defining expected frequencies (self unless a base shrank the search pool)."""
        return self if self._reference is None else self._reference

    def extended_levels(self) -> tuple[int, ...]:
        return (2,) * n_pwo(self.m) + self.process_levels

    def extended_matrix(self) -> np.ndarray:
        """PWO columns then process columns, one row per candidate."""
        if self._extended is None:
            pwo = _pwo_from_runs(self.orders)
            if self.proc is None:
                self._extended = pwo
            else:
                self._extended = np.hstack([pwo, self.proc.astype(np.int8)])
            self._extended.setflags(write=False)
        return self._extended

    def _row_keys(self) -> set[tuple[int, ...]]:
        if not hasattr(self, "_keys"):
            ext = np.hstack([self.orders, self.proc]) if self.proc is not None else self.orders
            self._keys = {tuple(int(x) for x in row) for row in ext}
        return self._keys

    def contains_run(self, order: Sequence[int], proc: Sequence[int] = ()) -> bool:
        return tuple(int(x) for x in order) + tuple(int(x) for x in proc) in self._row_keys()

    def leave_one_out(self, c: int) -> "CandidateSet":
        """Candidate set for m-1 components with constraints projected.

        Used to evaluate leave-one-out criteria; built on the reference pool
        (a base design never restricts projections).
        """
        if not 0 <= c < self.m:
            raise ValidationError(f"component {c} not in 0..{self.m - 1}")
        projected = tuple(
            p for con in self.constraints if (p := con.project(c)) is not None
        )
        process = None
        if self.n_process:
            ref = self.reference
            combos = np.unique(ref.proc, axis=0)
            names = tuple((f"X{j + 1}", s) for j, s in enumerate(self.process_levels))
            full = 1
            for s in self.process_levels:
                full *= s
            fraction = None if combos.shape[0] == full else tuple(
                tuple(int(x) for x in row) for row in combos
            )
            process = ProcessFactorSpec(names, fraction)
        return build(self.m - 1, constraints=projected, process=process)

    def __repr__(self) -> str:
        return (
            f"CandidateSet(m={self.m}, rows={self.n_rows}, "
            f"process={self.process_levels or None}, "
            f"constraints={len(self.constraints)})"
        )


def build(
    m: int,
    constraints: Sequence[Constraint] = (),
    process: ProcessFactorSpec | None = None,
    base: Design | None = None,
    max_m: int = MAX_COMPONENTS_DEFAULT,
) -> CandidateSet:
    """Assemble a candidate set.

    Rows are (base runs or all m! permutations, filtered by constraints)
    crossed with (process fraction or the full level grid). The reference
    pool ignores ``base``.
    """
    if not 2 <= m <= max_m:
        raise ValidationError(f"m={m} outside supported range 2..{max_m}")
    constraints = tuple(constraints)

    full = np.asarray(_full_runs(m))
    keep = _satisfies(full, constraints)
    if not keep.any():
        raise UnsatisfiableConstraintError(
            "no permutation satisfies the ordering constraints"
        )
    ref_orders = full[keep].copy()

    if base is not None:
        if base.m != m:
            raise ValidationError(f"base design has m={base.m}, expected {m}")
        if base.process is not None:
            raise ValidationError("base design must be orderings only")
        if not _satisfies(base.runs, constraints).all():
            raise ValidationError("base design violates an ordering constraint")
        seen = set()
        for row in base.runs:
            key = tuple(int(x) for x in row)
            if key in seen:
                raise ValidationError("base design has duplicate runs")
            seen.add(key)
        pool_orders = base.runs.copy()
    else:
        pool_orders = ref_orders

    if process is None:
        proc_pool = proc_ref = None
        levels = ()
    else:
        combos = process.combos()
        levels = process.levels
        proc_pool = np.repeat(combos[None, :, :], pool_orders.shape[0], axis=0).reshape(
            -1, combos.shape[1]
        )
        pool_orders = np.repeat(pool_orders, combos.shape[0], axis=0)
        proc_ref = np.repeat(combos[None, :, :], ref_orders.shape[0], axis=0).reshape(
            -1, combos.shape[1]
        )
        ref_orders = np.repeat(ref_orders, combos.shape[0], axis=0)

    reference = None
    if base is not None:
        reference = CandidateSet(m, ref_orders, proc_ref, levels, constraints, None)
    return CandidateSet(m, pool_orders, proc_pool, levels, constraints, reference)


def full_candidates(m: int, max_m: int = MAX_COMPONENTS_DEFAULT) -> CandidateSet:
    """Unrestricted candidate set of all m! runs (cached)."""
    got = _FULL_CACHE.get(m)
    if got is None:
        got = build(m, max_m=max_m)
        _FULL_CACHE[m] = got
    return got


_FULL_CACHE: dict[int, CandidateSet] = {}


def validate_against(design: Design, cands: CandidateSet) -> bool:
    """True iff every design row (ordering plus process levels) is a candidate row."""
    if design.m != cands.m:
        raise ValidationError(f"design m={design.m} vs candidate m={cands.m}")
    if design.process_levels != cands.process_levels:
        raise ValidationError(
            f"design process levels {design.process_levels} vs candidate {cands.process_levels}"
        )
    for i in range(design.n_runs):
        proc = () if design.process is None else design.process[i]
        if not cands.contains_run(design.runs[i], proc):
            return False
    return True
