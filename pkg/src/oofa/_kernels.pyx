# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled exchange-search swap scans.

Same contracts as oofa._kernels_py; see that module for the math. The scans
release the GIL so multi-start searches can overlap across threads.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def dopt_best_swap(double[:, ::1] xsel, double[:, ::1] xpool, double[:, ::1] minv):
    cdef Py_ssize_t n = xsel.shape[0]
    cdef Py_ssize_t p = xsel.shape[1]
    cdef Py_ssize_t pool = xpool.shape[0]
    cdef cnp.ndarray d_pool_arr = np.empty(pool, dtype=np.float64)
    cdef cnp.ndarray u_arr = np.empty((pool, p), dtype=np.float64)
    cdef cnp.ndarray d_sel_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray v_arr = np.empty((n, p), dtype=np.float64)
    cdef double[::1] d_pool = d_pool_arr
    cdef double[:, ::1] u = u_arr
    cdef double[::1] d_sel = d_sel_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t i, j, k, l
    cdef double acc, g, delta, best
    cdef Py_ssize_t best_i = 0, best_j = 0

    with nogil:
        for j in range(pool):
            acc = 0.0
            for k in range(p):
                g = 0.0
                for l in range(p):
                    g += minv[k, l] * xpool[j, l]
                u[j, k] = g
                acc += g * xpool[j, k]
            d_pool[j] = acc
        for i in range(n):
            acc = 0.0
            for k in range(p):
                g = 0.0
                for l in range(p):
                    g += minv[k, l] * xsel[i, l]
                v[i, k] = g
                acc += g * xsel[i, k]
            d_sel[i] = acc
        best = -1e300
        for i in range(n):
            for j in range(pool):
                g = 0.0
                for k in range(p):
                    g += xsel[i, k] * u[j, k]
                delta = (1.0 - d_sel[i]) * (1.0 + d_pool[j]) + g * g - 1.0
                if delta > best:
                    best = delta
                    best_i = i
                    best_j = j
    return best_i, best_j, best


def chi2_best_swap(int[:, ::1] cellcode, long long[::1] sel,
                   double[::1] counts, double[::1] expected, double[::1] winv):
    cdef Py_ssize_t pool = cellcode.shape[0]
    cdef Py_ssize_t q = cellcode.shape[1]
    cdef Py_ssize_t n = sel.shape[0]
    cdef Py_ssize_t ncell = counts.shape[0]
    cdef cnp.ndarray gm_arr = np.empty(ncell, dtype=np.float64)
    cdef cnp.ndarray gp_arr = np.empty(ncell, dtype=np.float64)
    cdef cnp.ndarray a_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] gm = gm_arr
    cdef double[::1] gp = gp_arr
    cdef double[::1] a = a_arr
    cdef Py_ssize_t i, j, t, u, v
    cdef double dev, acc, delta, best
    cdef Py_ssize_t best_i = 0, best_j = 0

    with nogil:
        for i in range(ncell):
            dev = counts[i] - expected[i]
            gm[i] = (1.0 - 2.0 * dev) * winv[i]
            gp[i] = (1.0 + 2.0 * dev) * winv[i]
        for i in range(n):
            acc = 0.0
            for t in range(q):
                acc += gm[cellcode[sel[i], t]]
            a[i] = acc
        best = 1e300
        for i in range(n):
            for j in range(pool):
                delta = a[i]
                for t in range(q):
                    u = cellcode[sel[i], t]
                    v = cellcode[j, t]
                    if u == v:
                        delta -= gm[u]
                    else:
                        delta += gp[v]
                if delta < best:
                    best = delta
                    best_i = i
                    best_j = j
    return best_i, best_j, best
