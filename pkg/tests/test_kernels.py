"""Both kernel backends against brute-force oracles."""
import itertools

import numpy as np
import pytest

from oofa import _kernels_py
from oofa.candidates import full_candidates
from oofa.criteria import model_matrix
from oofa.search import _chi2_tables

backends = [_kernels_py]
try:
    from oofa import _kernels

    backends.append(_kernels)
except ImportError:
    pass


def _dopt_brute(xsel, xpool):
    """Best swap by recomputing determinants from scratch."""
    base = np.linalg.det(xsel.T @ xsel)
    best = (-np.inf, None, None)
    for i in range(xsel.shape[0]):
        for j in range(xpool.shape[0]):
            trial = xsel.copy()
            trial[i] = xpool[j]
            ratio = np.linalg.det(trial.T @ trial) / base - 1.0
            if ratio > best[0] + 1e-12:
                best = (ratio, i, j)
    return best


@pytest.mark.parametrize("impl", backends, ids=lambda b: b.BACKEND_NAME)
def test_dopt_swap_matches_brute_force(impl):
    rng = np.random.default_rng(2)
    cands = full_candidates(4)
    xpool = np.ascontiguousarray(model_matrix(cands.extended_matrix()))
    for _ in range(6):
        sel = rng.choice(24, size=10, replace=False)
        xsel = np.ascontiguousarray(xpool[sel])
        minv = np.linalg.inv(xsel.T @ xsel)
        i, j, delta = impl.dopt_best_swap(xsel, xpool, minv)
        want_delta, want_i, want_j = _dopt_brute(xsel, xpool)
        assert delta == pytest.approx(want_delta, rel=1e-8, abs=1e-10)
        trial = xsel.copy()
        trial[i] = xpool[j]
        achieved = np.linalg.det(trial.T @ trial) / np.linalg.det(xsel.T @ xsel) - 1.0
        assert achieved == pytest.approx(delta, rel=1e-8, abs=1e-10)


def _chi2_brute(cellcode, sel, expected, winv, n_cells):
    def total(ss):
        counts = np.bincount(cellcode[ss].ravel(), minlength=n_cells).astype(float)
        return float(((counts - expected) ** 2 * winv).sum())

    base = total(sel)
    best = (np.inf, None, None)
    for i in range(sel.size):
        for j in range(cellcode.shape[0]):
            trial = sel.copy()
            trial[i] = j
            v = total(trial) - base
            if v < best[0] - 1e-12:
                best = (v, i, j)
    return best


@pytest.mark.parametrize("impl", backends, ids=lambda b: b.BACKEND_NAME)
def test_chi2_swap_matches_brute_force(impl):
    rng = np.random.default_rng(5)
    cands = full_candidates(4)
    cellcode, e_counts, m_total, n_pairs = _chi2_tables(cands)
    n = 9
    expected = n * e_counts / m_total
    winv = np.where(e_counts > 0, 1.0 / np.maximum(expected, 1.0), 0.0)
    for _ in range(6):
        sel = rng.choice(24, size=n, replace=False).astype(np.int64)
        counts = np.bincount(cellcode[sel].ravel(), minlength=expected.size).astype(float)
        i, j, delta = impl.chi2_best_swap(cellcode, sel, counts, expected, winv)
        want_delta, _wi, _wj = _chi2_brute(cellcode, sel, expected, winv, expected.size)
        assert delta == pytest.approx(want_delta, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("impl", backends, ids=lambda b: b.BACKEND_NAME)
def test_swap_scans_deterministic(impl):
    rng = np.random.default_rng(8)
    cands = full_candidates(4)
    xpool = np.ascontiguousarray(model_matrix(cands.extended_matrix()))
    sel = rng.choice(24, size=10, replace=False)
    xsel = np.ascontiguousarray(xpool[sel])
    minv = np.linalg.inv(xsel.T @ xsel)
    first = impl.dopt_best_swap(xsel, xpool, minv)
    for _ in range(3):
        assert impl.dopt_best_swap(xsel, xpool, minv) == first


def test_backend_selection_reports_name():
    from oofa.kernels import get_backend

    assert get_backend() in ("cython", "python")
