# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the numeric kernels.

Mirrors _pure.py semantically; results may differ from the fallback by
float summation order only (covered by cross-backend parity tests).
"""

from libc.math cimport isnan, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "fast"


def gini(values):
    """Discrete Gini via the sorted-rank identity, O(n log n)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.sort(
        np.ascontiguousarray(values, dtype=np.float64)
    )
    cdef Py_ssize_t n = x.shape[0]
    cdef double total = 0.0
    cdef double weighted = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += x[i]
        weighted += (i + 1.0) * x[i]
    return (2.0 * weighted - (n + 1.0) * total) / (n * total)


def hhi(values):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(
        values, dtype=np.float64
    )
    cdef Py_ssize_t n = x.shape[0]
    cdef double total = 0.0
    cdef double acc = 0.0
    cdef double share
    cdef Py_ssize_t i
    for i in range(n):
        total += x[i]
    for i in range(n):
        share = x[i] / total
        acc += share * share
    return acc


def topk_sum(values, k):
    """Sum of the k largest entries."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.sort(
        np.ascontiguousarray(values, dtype=np.float64)
    )
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t kk = min(<Py_ssize_t> k, n)
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n - kk, n):
        acc += x[i]
    return acc


def pearson(x, y):
    """Sample Pearson coefficient; NaN when either variance is zero."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(
        x, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ya = np.ascontiguousarray(
        y, dtype=np.float64
    )
    cdef Py_ssize_t n = xa.shape[0]
    cdef double mx = 0.0, my = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        mx += xa[i]
        my += ya[i]
    mx /= n
    my /= n
    cdef double sxx = 0.0, syy = 0.0, sxy = 0.0
    cdef double dx, dy
    for i in range(n):
        dx = xa[i] - mx
        dy = ya[i] - my
        sxx += dx * dx
        syy += dy * dy
        sxy += dx * dy
    if sxx == 0.0 or syy == 0.0:
        return float("nan")
    cdef double r = sxy / sqrt(sxx * syy)
    if r > 1.0:
        r = 1.0
    elif r < -1.0:
        r = -1.0
    return r


def coalition_count(stakes, threshold):
    """Smallest number of largest stakes whose sum reaches threshold * total."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.sort(
        np.ascontiguousarray(stakes, dtype=np.float64)
    )
    cdef Py_ssize_t n = s.shape[0]
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += s[i]
    cdef double target = (<double> threshold) * total
    cdef double acc = 0.0
    for i in range(n - 1, -1, -1):
        acc += s[i]
        if acc >= target:
            return n - i
    return n


def clip_benchmarks(weights, stakes, kappa):
    """Per-miner consensus benchmark: the largest observed weight backed by
    at least a kappa fraction of total validator stake.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w = np.ascontiguousarray(
        weights, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.ascontiguousarray(
        stakes, dtype=np.float64
    )
    cdef Py_ssize_t nv = w.shape[0]
    cdef Py_ssize_t nm = w.shape[1]
    cdef double total = 0.0
    cdef Py_ssize_t i, j, k
    for i in range(nv):
        total += s[i]
    cdef double target = (<double> kappa) * total
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nm, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] column = np.empty(nv, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order
    cdef double backing, candidate
    for j in range(nm):
        for i in range(nv):
            column[i] = w[i, j]
        order = np.argsort(-column, kind="stable")
        backing = 0.0
        candidate = column[order[0]]
        # Walk candidates from the largest weight down; stop at the first
        # run boundary where the accumulated backing reaches the target.
        # The smallest candidate always qualifies (backing = total stake).
        for k in range(nv):
            i = order[k]
            if column[i] != candidate:
                if backing >= target:
                    break
                candidate = column[i]
            backing += s[i]
        out[j] = candidate
    return out
