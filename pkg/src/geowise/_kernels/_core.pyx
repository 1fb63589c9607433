"""Compiled distance kernels.

Same contracts as geowise._kernels._py: exact brute-force scans in
double precision, k-NN ties broken by lower index. These loops dominate
applicability-domain fitting and neighbor construction, so they are the
one part of the package worth compiling.
"""

from libc.math cimport sqrt, INFINITY

import numpy as np


cdef inline double _sqdist(const double[:, ::1] a, Py_ssize_t i,
                           const double[:, ::1] b, Py_ssize_t j,
                           Py_ssize_t p) noexcept nogil:
    cdef double acc = 0.0, diff
    cdef Py_ssize_t q
    for q in range(p):
        diff = a[i, q] - b[j, q]
        acc += diff * diff
    return acc


def knn_indices(coords_obj, k):
    """Indices of the k nearest rows for every row, self excluded."""
    cdef const double[:, ::1] coords = np.ascontiguousarray(coords_obj, dtype=np.float64)
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t p = coords.shape[1]
    cdef Py_ssize_t kk = k
    if not 1 <= kk < n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    out_arr = np.empty((n, kk), dtype=np.intp)
    best_arr = np.empty(kk, dtype=np.float64)
    cdef Py_ssize_t[:, ::1] out = out_arr
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, j, m, pos
    cdef double d2
    for i in range(n):
        m = 0
        for j in range(n):
            if j == i:
                continue
            d2 = _sqdist(coords, i, coords, j, p)
            if m < kk:
                pos = m
                m += 1
            elif d2 < best[kk - 1]:
                pos = kk - 1
            else:
                continue
            # insertion keeps (distance, index) order; the strict ">"
            # leaves earlier (lower) indices ahead on exact ties
            while pos > 0 and best[pos - 1] > d2:
                best[pos] = best[pos - 1]
                out[i, pos] = out[i, pos - 1]
                pos -= 1
            best[pos] = d2
            out[i, pos] = j
    return out_arr


def pairwise_mean_distance(X_obj):
    """Mean Euclidean distance over all unordered row pairs."""
    cdef const double[:, ::1] X = np.ascontiguousarray(X_obj, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    if n < 2:
        raise ValueError("need at least 2 rows for a pairwise mean")
    cdef double total = 0.0, row
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n - 1):
            row = 0.0
            for j in range(i + 1, n):
                row += sqrt(_sqdist(X, i, X, j, p))
            total += row
    return total / (n * (n - 1) / 2.0)


def nearest_other_distance(X_obj):
    """Per-row Euclidean distance to the nearest other row."""
    cdef const double[:, ::1] X = np.ascontiguousarray(X_obj, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    if n < 2:
        raise ValueError("need at least 2 rows")
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double bestd, d2
    with nogil:
        for i in range(n):
            bestd = INFINITY
            for j in range(n):
                if j == i:
                    continue
                d2 = _sqdist(X, i, X, j, p)
                if d2 < bestd:
                    bestd = d2
            out[i] = sqrt(bestd)
    return out_arr


def nearest_cross_distance(queries_obj, X_obj):
    """Per-query Euclidean distance to the nearest row of X."""
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries_obj, dtype=np.float64)
    cdef const double[:, ::1] X = np.ascontiguousarray(X_obj, dtype=np.float64)
    cdef Py_ssize_t nq = Q.shape[0]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = Q.shape[1]
    if n == 0:
        raise ValueError("reference matrix is empty")
    if X.shape[1] != p:
        raise ValueError("query and reference dimensionality differ")
    out_arr = np.empty(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double bestd, d2
    with nogil:
        for i in range(nq):
            bestd = INFINITY
            for j in range(n):
                d2 = _sqdist(Q, i, X, j, p)
                if d2 < bestd:
                    bestd = d2
            out[i] = sqrt(bestd)
    return out_arr
