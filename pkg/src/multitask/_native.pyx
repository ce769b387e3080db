# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical hot kernels.

API twin of ``multitask._kernels_py``. The piecewise likelihood sweep is the
dominant cost of a campaign (thousands of small Cholesky factorizations per
inference call), so it is written as straight C loops with a stack of
preallocated work buffers.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isnan, log, sqrt, NAN, INFINITY, M_PI

cnp.import_array()

KERNEL_RBF = 0
KERNEL_MATERN52 = 1

BACKEND_NAME = "native"

cdef double LOG_2PI = log(2.0 * M_PI)
cdef double SQRT5 = sqrt(5.0)


cdef inline double _kval(double r, double l, double s, int kernel_id) nogil:
    cdef double a
    if kernel_id == 0:
        return s * s * exp(-(r * r) / (2.0 * l * l))
    a = SQRT5 * r / l
    return s * s * (1.0 + a + a * a / 3.0) * exp(-a)


def rbf_matrix(x1, x2, double length_scale, double signal_sd):
    return _matrix(np.ascontiguousarray(x1, dtype=np.float64),
                   np.ascontiguousarray(x2, dtype=np.float64),
                   length_scale, signal_sd, 0)


def matern52_matrix(x1, x2, double length_scale, double signal_sd):
    return _matrix(np.ascontiguousarray(x1, dtype=np.float64),
                   np.ascontiguousarray(x2, dtype=np.float64),
                   length_scale, signal_sd, 1)


cdef _matrix(double[::1] x1, double[::1] x2, double l, double s, int kernel_id):
    cdef Py_ssize_t m = x1.shape[0], n = x2.shape[0], i, j
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(m):
            for j in range(n):
                out[i, j] = _kval(fabs(x1[i] - x2[j]), l, s, kernel_id)
    return out_arr


cdef double _chol_lml(double* K, double* y, double* work, Py_ssize_t m) nogil:
    """In-place Cholesky of K (m x m, row-major) and zero-mean GP lml.

    Overwrites the lower triangle of K with L and work with L^{-1} y.
    Returns NAN when the matrix is not positive definite.
    """
    cdef Py_ssize_t i, j, k
    cdef double acc, d, logdet = 0.0, quad = 0.0
    for j in range(m):
        acc = K[j * m + j]
        for k in range(j):
            acc -= K[j * m + k] * K[j * m + k]
        if acc <= 0.0:
            return NAN
        d = sqrt(acc)
        K[j * m + j] = d
        logdet += log(d)
        for i in range(j + 1, m):
            acc = K[i * m + j]
            for k in range(j):
                acc -= K[i * m + k] * K[j * m + k]
            K[i * m + j] = acc / d
    for i in range(m):
        acc = y[i]
        for k in range(i):
            acc -= K[i * m + k] * work[k]
        work[i] = acc / K[i * m + i]
        quad += work[i] * work[i]
    return -0.5 * quad - logdet - 0.5 * m * LOG_2PI


def gp_log_marginal(x, y, double length_scale, double signal_sd, double noise_sd,
                    int kernel_id, double jitter):
    """Zero-mean GP log marginal likelihood; NaN if the Cholesky fails."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0]
    buf_k = np.empty(m * m, dtype=np.float64)
    buf_w = np.empty(m, dtype=np.float64)
    cdef double[::1] K = buf_k
    cdef double[::1] w = buf_w
    cdef Py_ssize_t i, j
    cdef double lml
    with nogil:
        for i in range(m):
            for j in range(m):
                K[i * m + j] = _kval(fabs(xv[i] - xv[j]), length_scale, signal_sd, kernel_id)
            K[i * m + i] += noise_sd * noise_sd + jitter
        lml = _chol_lml(&K[0], &yv[0], &w[0], m)
    return float(lml)


def piecewise_rbf_loglik(change_points, length_scales, signal_sds, noise_sds,
                         x_sorted, y_sorted, double jitter):
    """Per-draw piecewise-GP log marginal likelihood over three regions.

    Same contract as the python twin: change_points rows sorted ascending,
    x_sorted ascending; failed draws get -inf, empty regions contribute 0.
    """
    cdef double[:, ::1] cps = np.ascontiguousarray(change_points, dtype=np.float64)
    cdef double[:, ::1] ls = np.ascontiguousarray(length_scales, dtype=np.float64)
    cdef double[:, ::1] ss = np.ascontiguousarray(signal_sds, dtype=np.float64)
    cdef double[::1] ns = np.ascontiguousarray(noise_sds, dtype=np.float64)
    cdef double[::1] x = np.ascontiguousarray(x_sorted, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(y_sorted, dtype=np.float64)
    cdef Py_ssize_t n_draws = cps.shape[0], p = x.shape[0]
    out_arr = np.zeros(n_draws, dtype=np.float64)
    cdef double[::1] out = out_arr
    if p == 0 or n_draws == 0:
        return out_arr
    buf_k = np.empty(p * p, dtype=np.float64)
    buf_w = np.empty(p, dtype=np.float64)
    cdef double[::1] K = buf_k
    cdef double[::1] w = buf_w
    cdef Py_ssize_t i, r, a, b, i1, i2, mm, ii, jj
    cdef double total, lml, nvar, l, s
    with nogil:
        for i in range(n_draws):
            i1 = _lower_bound(&x[0], p, cps[i, 0])
            i2 = _lower_bound(&x[0], p, cps[i, 1])
            total = 0.0
            nvar = ns[i] * ns[i] + jitter
            for r in range(3):
                if r == 0:
                    a = 0; b = i1
                elif r == 1:
                    a = i1; b = i2
                else:
                    a = i2; b = p
                mm = b - a
                if mm == 0:
                    continue
                l = ls[i, r]
                s = ss[i, r]
                for ii in range(mm):
                    for jj in range(mm):
                        K[ii * mm + jj] = _kval(fabs(x[a + ii] - x[a + jj]), l, s, 0)
                    K[ii * mm + ii] += nvar
                lml = _chol_lml(&K[0], &y[a], &w[0], mm)
                if isnan(lml):
                    total = -INFINITY
                    break
                total += lml
            out[i] = total
    return out_arr


cdef inline Py_ssize_t _lower_bound(double* arr, Py_ssize_t n, double v) nogil:
    """First index i with arr[i] >= v (arr ascending)."""
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo
