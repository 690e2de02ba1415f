# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pairwise distances, masked softmax, Sinkhorn loop.

Semantics match ``_pure`` exactly (same update order, same convergence rule);
only the arithmetic is done in tight C loops.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log

cnp.import_array()

BACKEND = "compiled"


def pairwise_sq_euclidean(object a_in, object b_in):
    """Squared Euclidean distances between all row pairs, shape (n, m)."""
    cdef double[:, ::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            o[i, j] = acc
    return out


def masked_softmax(object logits_in, object mask_in=None):
    """Row-wise softmax; entries where ``mask`` is False come out exactly 0."""
    cdef double[:, ::1] x = np.ascontiguousarray(logits_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef cnp.uint8_t[:, ::1] msk
    cdef bint has_mask = mask_in is not None
    cdef Py_ssize_t i, j
    cdef double mx, s
    cdef bint any_live
    if has_mask:
        msk = np.ascontiguousarray(mask_in, dtype=np.uint8)
    for i in range(n):
        mx = -1e308
        any_live = not has_mask
        for j in range(m):
            if has_mask and not msk[i, j]:
                continue
            any_live = True
            if x[i, j] > mx:
                mx = x[i, j]
        if not any_live:
            raise ValueError("masked_softmax: a row has no unmasked entries")
        s = 0.0
        for j in range(m):
            if has_mask and not msk[i, j]:
                o[i, j] = 0.0
            else:
                o[i, j] = exp(x[i, j] - mx)
                s += o[i, j]
        for j in range(m):
            o[i, j] /= s
    return out


def sinkhorn_log_iterations(object m_in, object log_r_in, object log_c_in,
                            double eps, int max_iter, double tol):
    """Alternating log-domain scaling toward marginals (r, c).

    Returns (plan, converged, iterations); see ``_pure`` for the contract.
    """
    cdef double[:, ::1] cost = np.ascontiguousarray(m_in, dtype=np.float64)
    cdef double[::1] log_r = np.ascontiguousarray(log_r_in, dtype=np.float64)
    cdef double[::1] log_c = np.ascontiguousarray(log_c_in, dtype=np.float64)
    cdef Py_ssize_t n = cost.shape[0], q = cost.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x_arr = np.empty((n, q), dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=2] plan_arr = np.empty((n, q), dtype=np.float64)
    cdef double[:, ::1] plan = plan_arr
    cdef double[::1] alpha = np.zeros(n)
    cdef double[::1] beta = np.zeros(q)
    cdef double[::1] r = np.empty(n)
    cdef double[::1] c = np.empty(q)
    cdef double[::1] colsum = np.empty(q)
    cdef Py_ssize_t i, j, it
    cdef double mx, s, v, row_res, col_res, rowsum
    cdef bint converged = False, bad = False
    cdef int used = 0

    for i in range(n):
        r[i] = exp(log_r[i])
    for j in range(q):
        c[j] = exp(log_c[j])
    for i in range(n):
        for j in range(q):
            x[i, j] = -cost[i, j] / eps

    for it in range(1, max_iter + 1):
        used = it
        # row update: alpha_i = log_r_i - lse_j(x_ij + beta_j)
        for i in range(n):
            mx = -1e308
            for j in range(q):
                v = x[i, j] + beta[j]
                if v > mx:
                    mx = v
            s = 0.0
            for j in range(q):
                s += exp(x[i, j] + beta[j] - mx)
            alpha[i] = log_r[i] - (mx + log(s))
        # column update: beta_j = log_c_j - lse_i(x_ij + alpha_i)
        for j in range(q):
            mx = -1e308
            for i in range(n):
                v = x[i, j] + alpha[i]
                if v > mx:
                    mx = v
            s = 0.0
            for i in range(n):
                s += exp(x[i, j] + alpha[i] - mx)
            beta[j] = log_c[j] - (mx + log(s))
        # residuals from the realized plan
        row_res = 0.0
        col_res = 0.0
        for j in range(q):
            colsum[j] = 0.0
        for i in range(n):
            rowsum = 0.0
            for j in range(q):
                v = exp(x[i, j] + alpha[i] + beta[j])
                if not isfinite(v):
                    bad = True
                plan[i, j] = v
                rowsum += v
                colsum[j] += v
            v = fabs(rowsum - r[i])
            if v > row_res:
                row_res = v
        if bad:
            raise FloatingPointError(
                "sinkhorn: non-finite plan entries (epsilon too small for this cost matrix)"
            )
        for j in range(q):
            v = fabs(colsum[j] - c[j])
            if v > col_res:
                col_res = v
        if row_res <= tol and col_res <= tol:
            converged = True
            break

    return plan_arr, converged, used
