"""Numpy implementation of the exchange-search swap scans.

Drop-in fallback for the compiled extension; same arguments, same scan order
(slots outer, candidates inner, first best kept), so a fixed seed gives the
same search per backend. Floating-point results may differ from the compiled
kernel in the last bits.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def dopt_best_swap(
    xsel: np.ndarray, xpool: np.ndarray, minv: np.ndarray
) -> tuple[int, int, float]:
    """Best determinant-ratio swap of one design row for one candidate row.

    For in-row x_in and out-row x_out the determinant scales by
    (1 + d_in)(1 - d_out) + g^2 with d_x = x' M^-1 x and g = x_out' M^-1 x_in.
    Returns (slot, candidate, ratio - 1).
    """
    a = xpool @ minv
    d_pool = np.einsum("ij,ij->i", a, xpool)
    b = xsel @ minv
    d_sel = np.einsum("ij,ij->i", b, xsel)
    g = b @ xpool.T
    delta = (1.0 - d_sel)[:, None] * (1.0 + d_pool)[None, :] + g * g - 1.0
    flat = int(np.argmax(delta))
    i, j = divmod(flat, delta.shape[1])
    return i, j, float(delta[i, j])


def chi2_best_swap(
    cellcode: np.ndarray,
    sel: np.ndarray,
    counts: np.ndarray,
    expected: np.ndarray,
    winv: np.ndarray,
) -> tuple[int, int, float]:
    """Best chi-square-reducing swap.

    cellcode[r, q] is the global flat cell index row r occupies in tuple q;
    counts/expected/winv are per global cell, winv = 1/max(e, 1) and 0 on
    structural zeros. Removing a row changes cell u by
    ((n_u - 1 - e)^2 - (n_u - e)^2) * w = (1 - 2(n_u - e)) * w, adding is the
    mirror image, and when both land in the same cell the pair cancels.
    Returns (slot, candidate, chi-square change).
    """
    dev = counts - expected
    gm = (1.0 - 2.0 * dev) * winv
    gp = (1.0 + 2.0 * dev) * winv
    cc_sel = cellcode[sel]
    a = gm[cc_sel].sum(axis=1)
    b = gp[cellcode].sum(axis=1)
    g2 = gm + gp
    n, q = cc_sel.shape
    cross = np.zeros((n, cellcode.shape[0]))
    for t in range(q):
        cs = cc_sel[:, t]
        cross += (cs[:, None] == cellcode[None, :, t]) * g2[cs][:, None]
    delta = a[:, None] + b[None, :] - cross
    flat = int(np.argmin(delta))
    i, j = divmod(flat, delta.shape[1])
    return i, j, float(delta[i, j])
