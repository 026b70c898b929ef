"""Scalar goodness measures for a design relative to a candidate set.

Chi-square balance. For a t-tuple of extended columns, each level combination
contributes (n - e)^2 / max(e, 1), where n is the observed count, e = N*E/M
the expected count under the candidate set's reference pool, and cells with
E = 0 contribute nothing. Flooring the denominator at one count keeps cells
with sub-unit expectations from dominating; the floored form is what
reproduces the published values for the bundled reference designs (it only
differs from the plain Pearson form when e < 1, which requires N < M/E).
A design is balanced at strength t (an order-of-addition orthogonal array)
exactly when every tuple's statistic is zero, which is tested in exact
integer arithmetic (n*M == N*E).

D-efficiency. With model matrix X = [1 | PWO | process] over the design and
X_C over the reference pool, Deff = [det(X'X / N) / det(X_C'X_C / M)]^(1/p)
with p the column count; 0 when X'X is singular. Zero average chi-square at
strength 2 forces Deff = 1 because X'X then equals (N/M) X_C'X_C.

Row similarity. With delta(i,j) the number of coinciding PWO levels between
runs i and j, K_s = N^-2 * sum over all ordered pairs, diagonal included
(delta(i,i) = m'), of delta^s, and Sim_s = K_s^(1/s). This is the s-th moment
of the coincidence count between two rows drawn independently with
replacement; for every balanced column it gives Sim_1 = m'/2 exactly.

Stage balance. With f[k][l] the number of runs placing component k at stage
l, RMV_ord = sqrt((m+1)/(m-1) * sum((f - N/m)^2) / m^2). The (m+1)/(m-1)
factor calibrates the scale to the published values of the bundled designs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .candidates import CandidateSet, full_candidates, validate_against
from .errors import ValidationError
from .perm import Design, leave_one_out, n_pwo
from .reference import reference_counts, tuple_counts

#: Relative pivot threshold below which X'X is treated as singular.
SINGULAR_RTOL = 1e-10


@dataclass
class CriteriaReport:
    """Every scalar measure for one design. Field names are the stable JSON names."""

    chi2_ave_2: float
    chi2_max_2: float
    fo_2: float
    chi2_ave_3: float
    chi2_max_3: float
    fo_3: float
    chi2_ave_2_loo: float
    fo_2_loo: float
    chi2_ave_3_loo: float
    fo_3_loo: float
    d_eff: float
    mean_vif: float | None
    sim: list[float]
    rmv_ord: float
    is_oofa_oa_2: bool
    is_oofa_oa_3: bool

    def to_dict(self) -> dict:
        return {
            "chi2_ave_2": self.chi2_ave_2,
            "chi2_max_2": self.chi2_max_2,
            "fo_2": self.fo_2,
            "chi2_ave_3": self.chi2_ave_3,
            "chi2_max_3": self.chi2_max_3,
            "fo_3": self.fo_3,
            "chi2_ave_2_loo": self.chi2_ave_2_loo,
            "fo_2_loo": self.fo_2_loo,
            "chi2_ave_3_loo": self.chi2_ave_3_loo,
            "fo_3_loo": self.fo_3_loo,
            "d_eff": self.d_eff,
            "mean_vif": self.mean_vif,
            "sim": list(self.sim),
            "rmv_ord": self.rmv_ord,
            "is_oofa_oa_2": self.is_oofa_oa_2,
            "is_oofa_oa_3": self.is_oofa_oa_3,
        }


def _check_membership(design: Design, cands: CandidateSet) -> None:
    if not validate_against(design, cands):
        raise ValidationError("design contains a run outside the candidate set")


def _tuple_stats(
    design_matrix: np.ndarray,
    levels: Sequence[int],
    cands: CandidateSet,
    cols: Sequence[int],
) -> tuple[float, bool]:
    """(chi-square, exactly-balanced) for one column tuple."""
    table = reference_counts(cands, cols)
    tlv = tuple(levels[c] for c in cols)
    n = tuple_counts(design_matrix, cols, tlv)
    E = table.counts
    N = design_matrix.shape[0]
    M = table.total
    mask = E > 0
    exact = bool(np.all(n[mask] * M == N * E[mask])) and bool(np.all(n[~mask] == 0))
    e = N * E[mask] / M
    chi2 = float(np.sum((n[mask] - e) ** 2 / np.maximum(e, 1.0)))
    return (0.0 if exact else chi2), exact


def chi2_tuple(design: Design, cands: CandidateSet, cols: Sequence[int]) -> float:
    """Chi-square balance statistic of one t-tuple of extended columns."""
    _check_membership(design, cands)
    return _tuple_stats(design.extended_matrix(), design.extended_levels(), cands, cols)[0]


def _summary(
    design_matrix: np.ndarray, levels: Sequence[int], cands: CandidateSet, t: int
) -> tuple[float, float, float]:
    ncol = cands.n_columns
    tuples = list(itertools.combinations(range(ncol), t))
    if not tuples:
        return 0.0, 0.0, 1.0
    vals = np.empty(len(tuples))
    zeros = 0
    for i, cols in enumerate(tuples):
        vals[i], exact = _tuple_stats(design_matrix, levels, cands, cols)
        zeros += exact
    return float(vals.mean()), float(vals.max()), zeros / len(tuples)


def chi2_summary(design: Design, cands: CandidateSet, t: int) -> tuple[float, float, float]:
    """(average, maximum, fraction exactly zero) over all C(ncol, t) tuples."""
    if t not in (2, 3):
        raise ValidationError(f"strength must be 2 or 3, got {t}")
    _check_membership(design, cands)
    return _summary(design.extended_matrix(), design.extended_levels(), cands, t)


def loo_summary(design: Design, cands: CandidateSet, t: int) -> tuple[float, float]:
    """Mean (chi2_ave, fo) over the m leave-one-out projections.

    Each projection is evaluated against the candidate set with the dropped
    component's constraints projected out.
    """
    if design.m < 3:
        raise ValidationError("leave-one-out summaries need m >= 3")
    aves, fos = [], []
    for c in range(design.m):
        sub = leave_one_out(design, c)
        sub_cands = cands.leave_one_out(c)
        ave, _mx, fo = _summary(sub.extended_matrix(), sub.extended_levels(), sub_cands, t)
        aves.append(ave)
        fos.append(fo)
    return float(np.mean(aves)), float(np.mean(fos))


def model_matrix(matrix: np.ndarray) -> np.ndarray:
    """[1 | columns] as float64."""
    return np.hstack([np.ones((matrix.shape[0], 1)), matrix.astype(np.float64)])


def logdet_info(X: np.ndarray) -> float | None:
    """log det(X'X / n); None when singular at the relative pivot threshold."""
    n = X.shape[0]
    M = X.T @ X / n
    sign, logdet = np.linalg.slogdet(M)
    if sign <= 0:
        return None
    # relative pivot check via eigenvalue ratio
    w = np.linalg.eigvalsh(M)
    if w[0] <= SINGULAR_RTOL * max(w[-1], 1.0):
        return None
    return float(logdet)

def d_efficiency(design: Design, cands: CandidateSet | None = None) -> float:
    """Per-run-normalized determinant ratio to the reference pool, root 1/p."""
    if cands is None:
        cands = full_candidates(design.m)
    _check_membership(design, cands)
    X = model_matrix(design.extended_matrix())
    ld = logdet_info(X)
    if ld is None:
        return 0.0
    ref = cands.reference
    ld_ref = logdet_info(model_matrix(ref.extended_matrix()))
    if ld_ref is None:
        raise ValidationError("reference pool has a singular model matrix")
    return math.exp((ld - ld_ref) / X.shape[1])


def mean_vif(design: Design) -> float | None:
    """Mean variance-inflation factor of the PWO main effects; None when singular.

    VIFs are the diagonal of the inverse correlation matrix of the effect
    columns (process columns join the model when present; the mean is over
    the PWO effects only).
    """
    ext = design.extended_matrix().astype(np.float64)
    centered = ext - ext.mean(axis=0)
    cov = centered.T @ centered
    d = np.sqrt(np.diag(cov))
    if np.any(d <= 0):
        return None
    R = cov / np.outer(d, d)
    w = np.linalg.eigvalsh(R)
    if w[0] <= SINGULAR_RTOL * max(w[-1], 1.0):
        return None
    vifs = np.diag(np.linalg.inv(R))
    return float(np.mean(vifs[: n_pwo(design.m)]))


def coincidence_distribution(pwo: np.ndarray) -> np.ndarray:
    """delta(i,j) matrix: coinciding PWO levels for every ordered run pair."""
    eq = pwo[:, None, :] == pwo[None, :, :]
    return eq.sum(axis=2).astype(np.float64)


def moments(pwo: np.ndarray, s_max: int = 3) -> list[float]:
    """Sim_1..Sim_smax: root power moments of run coincidence counts.

    Mean over all ordered row pairs, diagonal included, so Sim_s is the s-th
    root of E[delta^s] for two rows sampled with replacement.
    """
    if s_max < 1:
        raise ValidationError(f"s_max must be >= 1, got {s_max}")
    if pwo.shape[0] < 2:
        raise ValidationError("moments need at least 2 runs")
    delta = coincidence_distribution(pwo)
    n2 = pwo.shape[0] ** 2
    return [float((delta**s).sum() / n2) ** (1.0 / s) for s in range(1, s_max + 1)]


def stage_counts(design: Design) -> np.ndarray:
    """f[k][l]: number of runs placing component k at stage l."""
    m = design.m
    f = np.zeros((m, m), dtype=np.int64)
    for l in range(m):
        f[:, l] = np.bincount(design.runs[:, l], minlength=m)
    return f


def rmv_ord(design: Design) -> float:
    """Root-mean dispersion of the component-by-stage counts."""
    m = design.m
    f = stage_counts(design)
    dev2 = float(np.sum((f - design.n_runs / m) ** 2))
    return math.sqrt(dev2 * (m + 1) / (m - 1)) / m


def evaluate(
    design: Design, cands: CandidateSet | None = None, s_max: int = 3
) -> CriteriaReport:
    """Full criteria report for a design against a candidate set."""
    if cands is None:
        cands = full_candidates(design.m)
    _check_membership(design, cands)
    ave2, max2, fo2 = chi2_summary(design, cands, 2)
    ave3, max3, fo3 = chi2_summary(design, cands, 3)
    if design.m >= 3:
        ave2_loo, fo2_loo = loo_summary(design, cands, 2)
        ave3_loo, fo3_loo = loo_summary(design, cands, 3)
    else:
        ave2_loo, fo2_loo, ave3_loo, fo3_loo = 0.0, 1.0, 0.0, 1.0
    return CriteriaReport(
        chi2_ave_2=ave2,
        chi2_max_2=max2,
        fo_2=fo2,
        chi2_ave_3=ave3,
        chi2_max_3=max3,
        fo_3=fo3,
        chi2_ave_2_loo=ave2_loo,
        fo_2_loo=fo2_loo,
        chi2_ave_3_loo=ave3_loo,
        fo_3_loo=fo3_loo,
        d_eff=d_efficiency(design, cands),
        mean_vif=mean_vif(design),
        sim=moments(design.pwo_matrix(), s_max),
        rmv_ord=rmv_ord(design),
        is_oofa_oa_2=fo2 == 1.0,
        is_oofa_oa_3=fo3 == 1.0,
    )


@dataclass
class RankTable:
    """Per-criterion competition ranks, average rank, and the final ordering."""

    ids: list
    criteria: list[tuple[str, str]]
    ranks: dict[str, list[int]]
    average: list[float]
    order: list

    def rows(self) -> list[dict]:
        out = []
        for pos, i in enumerate(self.order):
            k = self.ids.index(i)
            out.append(
                {
                    "id": i,
                    "rank": pos + 1,
                    "average_rank": self.average[k],
                    **{name: self.ranks[name][k] for name, _ in self.criteria},
                }
            )
        return out


def _competition_ranks(values: Sequence[float], direction: str) -> list[int]:
    """Ranks with ties assigned the lowest (best) rank number."""
    sign = -1.0 if direction == "max" else 1.0
    keyed = [sign * v for v in values]
    order = sorted(range(len(keyed)), key=lambda i: keyed[i])
    ranks = [0] * len(keyed)
    for pos, i in enumerate(order):
        if pos > 0 and keyed[i] == keyed[order[pos - 1]]:
            ranks[i] = ranks[order[pos - 1]]
        else:
            ranks[i] = pos + 1
    return ranks


def rank_designs(
    items: Sequence[tuple[object, CriteriaReport | Mapping]],
    criteria: Sequence[tuple[str, str]],
) -> RankTable:
    """Rank designs by average competition rank over the given criteria.

    Each criterion is (report field, "min" or "max"); ties share the lowest
    rank; the final ordering breaks average-rank ties by id.
    """
    if not items:
        raise ValidationError("rank_designs needs at least one design")
    ids = [i for i, _ in items]
    if len(set(map(str, ids))) != len(ids):
        raise ValidationError("design ids must be unique")
    reports = []
    for _, rep in items:
        reports.append(rep.to_dict() if isinstance(rep, CriteriaReport) else dict(rep))
    ranks: dict[str, list[int]] = {}
    for name, direction in criteria:
        if direction not in ("min", "max"):
            raise ValidationError(f"criterion direction must be min or max, got {direction}")
        try:
            vals = [report_value(r, name) for r in reports]
        except (KeyError, IndexError):
            raise ValidationError(f"criterion {name!r} missing from a report")
        ranks[name] = _competition_ranks(vals, direction)
    average = [
        float(np.mean([ranks[name][k] for name, _ in criteria]))
        for k in range(len(ids))
    ]
    order = sorted(ids, key=lambda i: (average[ids.index(i)], str(i)))
    return RankTable(ids=ids, criteria=list(criteria), ranks=ranks, average=average, order=order)


#: Default multi-criteria ranking used for balanced-design catalogs.
DEFAULT_RANK_CRITERIA: tuple[tuple[str, str], ...] = (
    ("fo_3", "max"),
    ("chi2_ave_3", "min"),
    ("fo_3_loo", "max"),
    ("chi2_ave_3_loo", "min"),
    ("sim_3", "min"),
)


def report_value(report: CriteriaReport | Mapping, name: str) -> float:
    """Fetch a criterion value, expanding sim_1/sim_2/... into the sim vector."""
    d = report.to_dict() if isinstance(report, CriteriaReport) else report
    if name.startswith("sim_"):
        idx = int(name.split("_")[1]) - 1
        return float(d["sim"][idx])
    return float(d[name])
