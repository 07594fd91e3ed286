# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels, bit-identical to the pure-numpy twins.

The contract is shared with ``_kernels_py``: per output element the
contraction runs strictly ascending, one rounding per multiply and one per
add (built with -ffp-contract=off so no FMA fusion changes the rounding).
"""

import numpy as np

cimport numpy as cnp


def matmul_nn(const float[:, ::1] a, const float[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1], m = b.shape[1]
    out_arr = np.zeros((n, m), dtype=np.float32)
    cdef float[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef float av, tmp
    with nogil:
        for i in range(n):
            for t in range(k):
                av = a[i, t]
                for j in range(m):
                    tmp = av * b[t, j]
                    out[i, j] = out[i, j] + tmp
    return out_arr


def matmul_tn(const float[:, ::1] a, const float[:, ::1] b):
    cdef Py_ssize_t k = a.shape[0], n = a.shape[1], m = b.shape[1]
    out_arr = np.zeros((n, m), dtype=np.float32)
    cdef float[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef float av, tmp
    with nogil:
        for t in range(k):
            for i in range(n):
                av = a[t, i]
                for j in range(m):
                    tmp = av * b[t, j]
                    out[i, j] = out[i, j] + tmp
    return out_arr


def matmul_nt(const float[:, ::1] a, const float[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1], m = b.shape[0]
    out_arr = np.zeros((n, m), dtype=np.float32)
    cdef float[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef float tmp
    with nogil:
        for i in range(n):
            for t in range(k):
                for j in range(m):
                    tmp = a[i, t] * b[j, t]
                    out[i, j] = out[i, j] + tmp
    return out_arr


def colsum(const float[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    out_arr = np.zeros(m, dtype=np.float32)
    cdef float[::1] out = out_arr
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(m):
                out[j] = out[j] + a[i, j]
    return out_arr


def sqdist(const double[:, ::1] x, const double[:, ::1] c):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = c.shape[0]
    out_arr = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef double diff, tmp
    with nogil:
        for i in range(n):
            for t in range(d):
                for j in range(k):
                    diff = x[i, t] - c[j, t]
                    tmp = diff * diff
                    out[i, j] = out[i, j] + tmp
    return out_arr


def cluster_sums(const double[:, ::1] x, const cnp.int64_t[::1] labels, Py_ssize_t k):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    sums_arr = np.zeros((k, d), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sums = sums_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t i, t
    cdef cnp.int64_t lab
    with nogil:
        for i in range(n):
            lab = labels[i]
            for t in range(d):
                sums[lab, t] = sums[lab, t] + x[i, t]
            counts[lab] = counts[lab] + 1
    return sums_arr, counts_arr
