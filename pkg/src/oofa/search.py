"""Optimal-design search: determinant-maximizing point exchange and
chi-square-minimizing exchange, with seeded multi-start orchestration.

Each start draws a random N-subset of the candidate pool and repeatedly
applies the single best (design row, candidate row) swap until no swap
improves the objective beyond tolerance. Swap gains use rank-one update
formulas (see oofa.kernels); the information matrix and cell counts are
maintained incrementally and re-derived from scratch at the end of each
start. Starts are independent: start i draws from PCG64(seed ^ i), results
merge in start order, so thread count never changes the outcome.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .candidates import CandidateSet, full_candidates
from .criteria import (
    DEFAULT_RANK_CRITERIA,
    CriteriaReport,
    RankTable,
    evaluate,
    model_matrix,
    rank_designs,
)
from .errors import ValidationError
from .isomorph import MAX_ISOMORPH_M, canonical_form, wt_signature
from .perm import Design
from .reference import reference_counts

#: Relative improvement below which an exchange pass stops.
EXCHANGE_RTOL = 1e-12
#: Ridge added to X'X while a start is rank deficient.
SINGULAR_RIDGE = 1e-8
#: Redraws attempted before a start is reported degenerate.
MAX_START_RETRIES = 50

CRITERIA = ("d_opt", "chi2_ave_2")


def default_threads() -> int:
    env = os.environ.get("OOFA_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class SearchConfig:
    """Search parameters; candidates defaults to the full m! pool."""

    m: int
    n_runs: int
    criterion: str = "d_opt"
    starts: int = 1
    seed: int = 0
    max_passes: int = 500
    candidates: CandidateSet | None = None
    keep: str = "best_only"

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValidationError(f"criterion must be one of {CRITERIA}")
        if self.keep not in ("best_only", "all_optima"):
            raise ValidationError("keep must be best_only or all_optima")
        if self.starts < 1:
            raise ValidationError("starts must be >= 1")

    def pool(self) -> CandidateSet:
        cands = self.candidates if self.candidates is not None else full_candidates(self.m)
        if cands.m != self.m:
            raise ValidationError(f"candidate set has m={cands.m}, config says {self.m}")
        if self.n_runs > cands.n_rows:
            raise ValidationError(
                f"n_runs={self.n_runs} exceeds candidate pool size {cands.n_rows}"
            )
        return cands


@dataclass
class StartTrace:
    """Outcome of one start: final objective and bookkeeping for audits."""

    start: int
    objective: float
    objective_incremental: float
    n_swaps: int
    degenerate: bool
    selection: tuple[int, ...]


@dataclass
class SearchHit:
    design: Design
    report: CriteriaReport
    objective: float
    duplicate_rows: bool


@dataclass
class SearchResult:
    criterion: str
    seed: int
    generator: str
    backend: str
    designs: list[SearchHit]
    distinct_wt_classes: int
    trace: list[StartTrace]

    @property
    def best_objective(self) -> float | None:
        vals = [t.objective for t in self.trace]
        if not vals:
            return None
        return max(vals) if self.criterion == "d_opt" else min(vals)


def _rng_for_start(seed: int, start: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed ^ start))


def _try_factor(m_mat: np.ndarray) -> tuple[bool, np.ndarray | None, float]:
    """(is nonsingular, inverse, logdet) via Cholesky.

    Relative pivot threshold 1e-10; Cholesky diagonals are pivot square roots.
    """
    try:
        chol = np.linalg.cholesky(m_mat)
    except np.linalg.LinAlgError:
        return False, None, -math.inf
    diag = np.diag(chol)
    if diag.min() <= 1e-5 * diag.max():
        return False, None, -math.inf
    logdet = 2.0 * float(np.sum(np.log(diag)))
    try:
        linv = np.linalg.inv(chol)
    except np.linalg.LinAlgError:
        return False, None, -math.inf
    return True, linv.T @ linv, logdet


def _dopt_start(
    xpool: np.ndarray, n_runs: int, rng: np.random.Generator, max_passes: int, start: int
) -> StartTrace:
    pool_size, p = xpool.shape
    sel = None
    ok = False
    for _ in range(MAX_START_RETRIES):
        cand = rng.choice(pool_size, size=n_runs, replace=False).astype(np.int64)
        m_mat = xpool[cand].T @ xpool[cand]
        ok, minv, logdet = _try_factor(m_mat)
        sel = cand
        if ok:
            break
    degenerate = not ok
    xsel = np.ascontiguousarray(xpool[sel])
    m_mat = xsel.T @ xsel
    if degenerate:
        ridge = SINGULAR_RIDGE * np.eye(p)
        minv = np.linalg.inv(m_mat + ridge)
        logdet = float(np.linalg.slogdet(m_mat + ridge)[1])
    logdet_inc = logdet
    swaps = 0
    while swaps < max_passes:
        i, j, delta = kernels.dopt_best_swap(xsel, xpool, minv)
        if not delta > EXCHANGE_RTOL:
            break
        sel[i] = j
        xsel[i] = xpool[j]
        m_mat = xsel.T @ xsel
        ok, minv_new, logdet_scratch = _try_factor(m_mat)
        if ok:
            if not degenerate:
                logdet_inc += math.log1p(delta)
            else:
                degenerate = False  # rank achieved; drop the ridge
                logdet_inc = logdet_scratch
            minv = minv_new
        else:
            degenerate = True
            minv = np.linalg.inv(m_mat + SINGULAR_RIDGE * np.eye(p))
            logdet_inc = -math.inf
        swaps += 1
    okf, _, logdet_final = _try_factor(xsel.T @ xsel)
    return StartTrace(
        start=start,
        objective=logdet_final if okf else -math.inf,
        objective_incremental=logdet_inc,
        n_swaps=swaps,
        degenerate=degenerate,
        selection=tuple(int(x) for x in sel),
    )


def _chi2_tables(cands: CandidateSet):
    """Per-pair flattened cell codes plus expected counts for the exchange scan."""
    ext = cands.extended_matrix().astype(np.int64)
    levels = cands.extended_levels()
    pairs = list(itertools.combinations(range(cands.n_columns), 2))
    codes = []
    e_parts = []
    offset = 0
    for i, j in pairs:
        table = reference_counts(cands, (i, j))
        ncell = table.n_cells
        codes.append(ext[:, i] * levels[j] + ext[:, j] + offset)
        e_parts.append(table.counts)
        offset += ncell
    cellcode = np.ascontiguousarray(np.stack(codes, axis=1).astype(np.int32))
    e_counts = np.concatenate(e_parts).astype(np.float64)
    m_total = cands.reference.n_rows
    return cellcode, e_counts, m_total, len(pairs)


def _chi2_start(
    cellcode: np.ndarray,
    expected: np.ndarray,
    winv: np.ndarray,
    n_cells: int,
    n_pairs: int,
    n_runs: int,
    pool_size: int,
    rng: np.random.Generator,
    max_passes: int,
    start: int,
) -> StartTrace:
    sel = rng.choice(pool_size, size=n_runs, replace=False).astype(np.int64)
    counts = np.bincount(cellcode[sel].ravel(), minlength=n_cells).astype(np.float64)
    chi2_sum = float(np.sum((counts - expected) ** 2 * winv))
    chi2_inc = chi2_sum
    swaps = 0
    while swaps < max_passes:
        i, j, delta = kernels.chi2_best_swap(cellcode, sel, counts, expected, winv)
        if not delta < -EXCHANGE_RTOL * max(1.0, abs(chi2_inc)):
            break
        np.add.at(counts, cellcode[sel[i]], -1.0)
        np.add.at(counts, cellcode[j], 1.0)
        sel[i] = j
        chi2_inc += delta
        swaps += 1
    scratch = float(np.sum((counts - expected) ** 2 * winv))
    return StartTrace(
        start=start,
        objective=scratch / n_pairs,
        objective_incremental=chi2_inc / n_pairs,
        n_swaps=swaps,
        degenerate=False,
        selection=tuple(int(x) for x in sel),
    )


def _design_from_selection(cands: CandidateSet, sel: Sequence[int]) -> Design:
    orders = cands.orders[list(sel)]
    proc = None if cands.proc is None else cands.proc[list(sel)]
    return Design(orders, m=cands.m, process=proc, process_levels=cands.process_levels)


def _design_key(design: Design) -> tuple:
    rows = design.runs if design.process is None else np.hstack([design.runs, design.process])
    return tuple(sorted(tuple(int(x) for x in r) for r in rows))


def _sort_key(design: Design) -> tuple:
    if design.process is None and design.m <= MAX_ISOMORPH_M:
        return canonical_form(design)
    return _design_key(design)


def _collect(
    cfg: SearchConfig, cands: CandidateSet, traces: list[StartTrace]
) -> SearchResult:
    maximize = cfg.criterion == "d_opt"
    valid = [t for t in traces if not (maximize and t.objective == -math.inf)]
    hits: list[SearchHit] = []
    if valid:
        best = max(t.objective for t in valid) if maximize else min(t.objective for t in valid)
        if cfg.keep == "best_only":
            tol = 1e-12 * max(1.0, abs(best))
        else:
            tol = 1e-9 * max(1.0, abs(best))
        chosen = [t for t in valid if abs(t.objective - best) <= tol]
        seen: dict[tuple, StartTrace] = {}
        for t in chosen:
            key = _design_key(_design_from_selection(cands, t.selection))
            if key not in seen:
                seen[key] = t
        for key, t in seen.items():
            design = _design_from_selection(cands, t.selection)
            report = evaluate(design, cands)
            hits.append(
                SearchHit(
                    design=design,
                    report=report,
                    objective=t.objective,
                    duplicate_rows=len(key) != len(set(key)),
                )
            )
        hits.sort(
            key=lambda h: ((-h.objective if maximize else h.objective), _sort_key(h.design))
        )
    n_classes = len({wt_signature(h.design) for h in hits}) if hits else 0
    return SearchResult(
        criterion=cfg.criterion,
        seed=cfg.seed,
        generator="PCG64",
        backend=kernels.get_backend(),
        designs=hits,
        distinct_wt_classes=n_classes,
        trace=traces,
    )


def fedorov_search(cfg: SearchConfig, threads: int | None = None) -> SearchResult:
    """Multi-start determinant-maximizing point exchange."""
    if cfg.criterion != "d_opt":
        raise ValidationError("fedorov_search requires criterion d_opt")
    cands = cfg.pool()
    xpool = np.ascontiguousarray(model_matrix(cands.extended_matrix()))

    def run(start: int) -> StartTrace:
        return _dopt_start(xpool, cfg.n_runs, _rng_for_start(cfg.seed, start), cfg.max_passes, start)

    traces = _map_starts(run, cfg.starts, threads)
    return _collect(cfg, cands, traces)


def chi2_exchange_search(cfg: SearchConfig, threads: int | None = None) -> SearchResult:
    """Multi-start chi-square-minimizing point exchange; works below model rank."""
    if cfg.criterion != "chi2_ave_2":
        raise ValidationError("chi2_exchange_search requires criterion chi2_ave_2")
    cands = cfg.pool()
    cellcode, e_counts, m_total, n_pairs = _chi2_tables(cands)
    expected = cfg.n_runs * e_counts / m_total
    winv = np.where(e_counts > 0, 1.0 / np.maximum(expected, 1.0), 0.0)
    n_cells = expected.shape[0]

    def run(start: int) -> StartTrace:
        return _chi2_start(
            cellcode,
            expected,
            winv,
            n_cells,
            n_pairs,
            cfg.n_runs,
            cands.n_rows,
            _rng_for_start(cfg.seed, start),
            cfg.max_passes,
            start,
        )

    traces = _map_starts(run, cfg.starts, threads)
    return _collect(cfg, cands, traces)


def search(cfg: SearchConfig, threads: int | None = None) -> SearchResult:
    """Dispatch on the configured criterion."""
    if cfg.criterion == "d_opt":
        return fedorov_search(cfg, threads)
    return chi2_exchange_search(cfg, threads)


def _map_starts(run, starts: int, threads: int | None) -> list:
    workers = threads if threads is not None else default_threads()
    if workers <= 1 or starts == 1:
        return [run(s) for s in range(starts)]
    with ThreadPoolExecutor(max_workers=min(workers, starts)) as pool:
        return list(pool.map(run, range(starts)))


def augment_search(
    base: Design,
    process,
    seed: int = 0,
    starts: int = 20,
) -> SearchResult:
    """Assign process-factor levels to a base design's runs so that the
    augmented design stays balanced at strength 2 (PWO pairs, process pairs,
    and PWO-by-process pairs all exact).

    Point exchange over the crossed pool rarely reaches exact balance: valid
    assignments are isolated, so the assignment subproblem is solved
    directly. For two-level factors over the full level grid, each process
    column must pick N/2 runs covering exactly half of every PWO column's
    support, and any two columns must overlap in N/4 runs. All such
    half-splitting subsets are enumerated (meet in the middle over the two
    run halves) and a pairwise-compatible family of p subsets is picked by
    seeded greedy search with backtracking.

    Returns a SearchResult whose designs hold the certified augmentation, or
    no designs when none exists.
    """
    from .candidates import ProcessFactorSpec, build as build_candidates

    if not isinstance(process, ProcessFactorSpec):
        raise ValidationError("augment_search needs a ProcessFactorSpec")
    if process.fraction is not None:
        raise ValidationError(
            "augment_search assigns over the full level grid; use the exchange "
            "searches for fractionated process pools"
        )
    if any(s != 2 for s in process.levels):
        raise ValidationError("augment_search supports two-level process factors")
    n = base.n_runs
    if n % 4 != 0:
        raise ValidationError(
            f"exact two-level augmentation needs N divisible by 4, got {n}"
        )
    if n > 28:
        raise ValidationError("subset enumeration is capped at N <= 28 runs")
    pwo = base.pwo_matrix().astype(np.int64)
    if not np.all(pwo.sum(axis=0) * 2 == n):
        raise ValidationError("base design must have balanced PWO columns")

    subsets = _half_splitting_subsets(pwo)
    p = len(process.levels)
    cands = build_candidates(base.m, process=process, base=base)
    result = SearchResult(
        criterion="chi2_ave_2",
        seed=seed,
        generator="PCG64",
        backend=kernels.get_backend(),
        designs=[],
        distinct_wt_classes=0,
        trace=[],
    )
    if len(subsets) < p:
        return result
    masks = np.array(subsets, dtype=np.int8)
    overlap = masks @ masks.T
    good = overlap == n // 4
    family = _compatible_family(good, p, seed, starts)
    if family is None:
        return result
    proc_cols = masks[list(family)].T.astype(np.int64)
    design = Design(base.runs, m=base.m, process=proc_cols, process_levels=process.levels)
    report = evaluate(design, cands)
    result.designs = [
        SearchHit(design=design, report=report, objective=0.0, duplicate_rows=False)
    ]
    result.distinct_wt_classes = 1
    result.trace = [
        StartTrace(
            start=0,
            objective=report.chi2_ave_2,
            objective_incremental=report.chi2_ave_2,
            n_swaps=0,
            degenerate=False,
            selection=tuple(range(design.n_runs)),
        )
    ]
    return result


def _half_splitting_subsets(pwo: np.ndarray) -> list[tuple[int, ...]]:
    """All run subsets of size N/2 covering exactly half of every PWO column.

    Meet in the middle: enumerate subsets of each half of the runs, group by
    (size, per-column sums), and join complementary keys.
    """
    n, mp = pwo.shape
    half = n // 2
    target = n // 4

    def enumerate_half(rows: np.ndarray) -> dict:
        table: dict = {}
        k = rows.shape[0]
        for mask in range(1 << k):
            size = mask.bit_count()
            if size > half:
                continue
            sums = np.zeros(mp, dtype=np.int64)
            mm = mask
            while mm:
                b = (mm & -mm).bit_length() - 1
                sums += rows[b]
                mm &= mm - 1
            key = (size, tuple(sums.tolist()))
            table.setdefault(key, []).append(mask)
        return table

    first = enumerate_half(pwo[:half])
    second = enumerate_half(pwo[half:])
    out: list[tuple[int, ...]] = []
    for (size, sums), masks_a in first.items():
        need = (half - size, tuple(target - s for s in sums))
        for mask_a in masks_a:
            for mask_b in second.get(need, ()):
                indic = [0] * n
                for b in range(half):
                    if mask_a >> b & 1:
                        indic[b] = 1
                    if mask_b >> b & 1:
                        indic[half + b] = 1
                out.append(tuple(indic))
    out.sort()
    return out


def _compatible_family(good: np.ndarray, p: int, seed: int, starts: int):
    """Seeded greedy-with-backtracking search for p pairwise-compatible vertices."""
    nv = good.shape[0]

    def extend(chosen: list[int], allowed: np.ndarray) -> list[int] | None:
        if len(chosen) == p:
            return chosen
        for idx in range(allowed.size):
            v = int(allowed[idx])
            rest = allowed[idx + 1 :]
            got = extend(chosen + [v], rest[good[v][rest]])
            if got is not None:
                return got
        return None

    for start in range(starts):
        rng = np.random.Generator(np.random.PCG64(seed ^ start))
        order = rng.permutation(nv)
        got = extend([], order)
        if got is not None:
            return got
    return None


@dataclass
class CatalogEntry:
    config: SearchConfig
    result: SearchResult
    representatives: list[SearchHit]
    ranking: RankTable | None


def catalog_run(
    specs: Sequence[SearchConfig],
    criteria: Sequence[tuple[str, str]] = DEFAULT_RANK_CRITERIA,
    threads: int | None = None,
) -> list[CatalogEntry]:
    """Run searches, deduplicate optima by wt signature, and rank each class
    representative by the given criteria."""
    entries = []
    for cfg in specs:
        res = search(cfg, threads)
        by_class: dict = {}
        for hit in res.designs:
            sig = wt_signature(hit.design)
            if sig not in by_class:
                by_class[sig] = hit
        reps = list(by_class.values())
        ranking = None
        if reps:
            ranking = rank_designs(
                [(i + 1, h.report) for i, h in enumerate(reps)], criteria
            )
        entries.append(CatalogEntry(config=cfg, result=res, representatives=reps, ranking=ranking))
    return entries
