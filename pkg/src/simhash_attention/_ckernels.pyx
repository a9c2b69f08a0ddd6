# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_pykernels``.

Loops are written to reproduce the fallback's results exactly: every dot
product is a plain left-to-right accumulation starting from 0.0.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


def hash_assignments(const double[:, ::1] X, const double[:, :, ::1] projections,
                     const cnp.int64_t[:, ::1] coeffs, cnp.int64_t table_size):
    cdef Py_ssize_t n = projections.shape[0]
    cdef Py_ssize_t r = projections.shape[1]
    cdef Py_ssize_t d = projections.shape[2]
    cdef Py_ssize_t N = X.shape[0]
    cdef Py_ssize_t k, v, b, t
    cdef double acc
    cdef cnp.int64_t bucket

    out = np.empty((n, N), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    for k in range(n):
        for v in range(N):
            bucket = 0
            for b in range(r):
                acc = 0.0
                for t in range(d):
                    acc = acc + projections[k, b, t] * X[v, t]
                if acc >= 0.0:
                    bucket = bucket + coeffs[k, b]
            o[k, v] = bucket % table_size
    return out


def collision_from_assignments(const cnp.int64_t[:, ::1] assignments):
    cdef Py_ssize_t n = assignments.shape[0]
    cdef Py_ssize_t N = assignments.shape[1]
    cdef Py_ssize_t k, i, j

    out = np.zeros((N, N), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    for k in range(n):
        for i in range(N):
            o[i, i] = 1
            for j in range(i + 1, N):
                if assignments[k, i] == assignments[k, j]:
                    o[i, j] = 1
                    o[j, i] = 1
    return out.view(np.bool_)


def head_scores(const double[:, ::1] Q, const double[:, ::1] K, const cnp.uint8_t[:, ::1] mask):
    """Literal Algorithm 1 loop for one head: row-major visits, both writes, last wins."""
    cdef Py_ssize_t L = mask.shape[0]
    cdef Py_ssize_t d = Q.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc

    A = np.zeros((L, L), dtype=np.float64)
    cdef double[:, ::1] a = A
    for i in range(L):
        for j in range(L):
            if mask[i, j]:
                acc = 0.0
                for t in range(d):
                    acc = acc + Q[i, t] * K[j, t]
                a[i, j] = acc
                a[j, i] = acc
    return A
