"""Response modeling on PWO matrices: main-effects least squares and a
two-stage stepwise strategy.

Stage one runs forward/backward stepwise over the PWO main effects using
partial-F p-values (alpha defaults 0.05; the thresholds are conventions, not
givens). Stage two reruns the selection over the stage-one active mains plus
the two-factor interactions eligible under the heredity rule: weak heredity
(default) admits an interaction when at least one parent main is active,
strong heredity requires both. Interaction columns are elementwise products
of the 0/1 PWO columns, so coefficients stay interpretable in that coding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import SingularModelError, ValidationError
from .perm import Design, pwo_columns

_RANK_RTOL = 1e-10


@dataclass
class Term:
    name: str
    coefficient: float
    std_error: float


@dataclass
class FittedModel:
    terms: list[Term]
    intercept: float
    intercept_se: float
    residual_df: int
    r_squared: float
    sigma2_hat: float

    def coefficient(self, name: str) -> float:
        for t in self.terms:
            if t.name == name:
                return t.coefficient
        raise KeyError(name)

    def term_names(self) -> list[str]:
        return [t.name for t in self.terms]


def _as_pwo(design_or_pwo) -> np.ndarray:
    if isinstance(design_or_pwo, Design):
        return design_or_pwo.pwo_matrix().astype(np.float64)
    return np.asarray(design_or_pwo, dtype=np.float64)


def main_effect_names(m: int) -> list[str]:
    return [f"F{k}{l}" for k, l in pwo_columns(m)]


def _solve(X: np.ndarray, y: np.ndarray):
    """Least squares with explicit rank check; returns (beta, rss, xtx_inv)."""
    n, p = X.shape
    xtx = X.T @ X
    w = np.linalg.eigvalsh(xtx)
    if w[0] <= _RANK_RTOL * max(w[-1], 1.0):
        raise SingularModelError("model matrix is singular")
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    return beta, float(resid @ resid), np.linalg.inv(xtx)


def fit_main_effects(design_or_pwo, y: Sequence[float]) -> FittedModel:
    """Least-squares fit of the response on [1 | PWO columns]."""
    P = _as_pwo(design_or_pwo)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (P.shape[0],):
        raise ValidationError(f"response length {y.shape} does not match {P.shape[0]} runs")
    names = _infer_names(P.shape[1])
    return _fit(P, y, names)


def _infer_names(n_cols: int) -> list[str]:
    # n_cols = m(m-1)/2 determines m
    m = int(round((1 + np.sqrt(1 + 8 * n_cols)) / 2))
    if m * (m - 1) // 2 != n_cols:
        return [f"x{j}" for j in range(n_cols)]
    return main_effect_names(m)


def _fit(cols: np.ndarray, y: np.ndarray, names: list[str]) -> FittedModel:
    n = cols.shape[0]
    X = np.hstack([np.ones((n, 1)), cols])
    if n <= X.shape[1] - 1:
        raise SingularModelError(f"{n} runs cannot support {X.shape[1]} coefficients")
    beta, rss, xtx_inv = _solve(X, y)
    df = n - X.shape[1]
    sigma2 = rss / df if df > 0 else 0.0
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    terms = [Term(nm, float(b), float(s)) for nm, b, s in zip(names, beta[1:], se[1:])]
    return FittedModel(
        terms=terms,
        intercept=float(beta[0]),
        intercept_se=float(se[0]),
        residual_df=df,
        r_squared=r2,
        sigma2_hat=sigma2,
    )


def _rss(cols: list[np.ndarray], y: np.ndarray) -> float:
    n = y.shape[0]
    X = np.hstack([np.ones((n, 1))] + [c[:, None] for c in cols]) if cols else np.ones((n, 1))
    beta, rss, _ = _solve(X, y)
    return rss


def _partial_f_pvalue(rss0: float, rss1: float, df1: int) -> float:
    """p-value for adding one term: F = (rss0 - rss1) / (rss1 / df1)."""
    if df1 <= 0:
        return 1.0
    gain = rss0 - rss1
    if rss1 <= 1e-12 * max(rss0, 1.0):
        return 0.0 if gain > 1e-12 * max(rss0, 1.0) else 1.0
    f = gain / (rss1 / df1)
    if f <= 0:
        return 1.0
    return float(stats.f.sf(f, 1, df1))


def _forward_backward(
    pool: dict[str, np.ndarray], y: np.ndarray, alpha_in: float, alpha_out: float
) -> list[str]:
    """Deterministic forward/backward selection; ties break by pool order."""
    active: list[str] = []
    names = list(pool)
    n = y.shape[0]
    for _ in range(2 * len(names) + 1):
        changed = False
        # forward: best admissible candidate
        rss0 = _rss([pool[a] for a in active], y)
        best_name, best_p = None, alpha_in
        for name in names:
            if name in active:
                continue
            k = len(active) + 1
            if n - k - 1 < 1:
                continue
            try:
                rss1 = _rss([pool[a] for a in active] + [pool[name]], y)
            except SingularModelError:
                continue
            p = _partial_f_pvalue(rss0, rss1, n - k - 1)
            if p < best_p - 1e-15:
                best_name, best_p = name, p
        if best_name is not None:
            active.append(best_name)
            changed = True
        # backward: worst member above the removal threshold
        while len(active) > 0:
            rss_full = _rss([pool[a] for a in active], y)
            df = n - len(active) - 1
            worst_name, worst_p = None, alpha_out
            for name in active:
                others = [pool[a] for a in active if a != name]
                rss_red = _rss(others, y)
                p = _partial_f_pvalue(rss_red, rss_full, df)
                if p > worst_p + 1e-15:
                    worst_name, worst_p = name, p
            if worst_name is None:
                break
            active.remove(worst_name)
            changed = True
        if not changed:
            break
    return active


def stepwise(
    design_or_pwo,
    y: Sequence[float],
    alpha_in: float = 0.05,
    alpha_out: float = 0.05,
    heredity: str = "weak",
) -> FittedModel:
    """Two-stage stepwise: main effects first, then eligible interactions."""
    if heredity not in ("weak", "strong"):
        raise ValidationError("heredity must be weak or strong")
    P = _as_pwo(design_or_pwo)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (P.shape[0],):
        raise ValidationError(f"response length {y.shape} does not match {P.shape[0]} runs")
    names = _infer_names(P.shape[1])
    mains = {nm: P[:, j] for j, nm in enumerate(names)}

    stage1 = _forward_backward(mains, y, alpha_in, alpha_out)

    pool: dict[str, np.ndarray] = {nm: mains[nm] for nm in stage1}
    active_set = set(stage1)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            na, nb = names[a], names[b]
            if heredity == "weak":
                eligible = na in active_set or nb in active_set
            else:
                eligible = na in active_set and nb in active_set
            if eligible:
                pool[f"{na}:{nb}"] = mains_product(mains[na], mains[nb])
    stage2 = _forward_backward(pool, y, alpha_in, alpha_out)

    cols = np.column_stack([pool[nm] for nm in stage2]) if stage2 else np.empty((len(y), 0))
    return _fit(cols, y, stage2)


def mains_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Interaction column: elementwise product of two 0/1 main-effect columns."""
    return a * b
