# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-scan counting and recurrence kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, isfinite

cnp.import_array()

# 4*A*X must stay below this for int64 row arithmetic to be exact.
SAFE_LIMIT = 2 ** 62


cdef inline long long _isqrt(long long v) nogil:
    cdef long long s
    if v <= 0:
        return 0
    s = <long long> sqrt(<double> v)
    while s * s > v:
        s -= 1
    while (s + 1) * (s + 1) <= v:
        s += 1
    return s


cdef inline long long _floordiv(long long a, long long b) nogil:
    # b > 0
    cdef long long q = a / b
    if (a % b != 0) and (a < 0):
        q -= 1
    return q


cdef long long _count(long long A, long long B, long long C, long long X) nogil:
    cdef long long D = 4 * A * C - B * B
    cdef long long lim, nmax, n, disc, s, total, two_a
    if X < 0:
        return 0
    lim = 4 * A * X
    nmax = _isqrt(lim / D)
    while D * (nmax + 1) * (nmax + 1) <= lim:
        nmax += 1
    while nmax > 0 and D * nmax * nmax > lim:
        nmax -= 1
    two_a = 2 * A
    total = 0
    for n in range(-nmax, nmax + 1):
        disc = lim - D * n * n
        if disc < 0:
            continue
        s = _isqrt(disc)
        total += _floordiv(s - B * n, two_a) + _floordiv(s + B * n, two_a) + 1
    return total


def count_int_form(long long A, long long B, long long C, long long X):
    """Lattice points with A m^2 + B m n + C n^2 <= X (integer form, integer X)."""
    return _count(A, B, C, X)


def count_int_form_many(long long A, long long B, long long C, X):
    cdef cnp.int64_t[:] xs = np.ascontiguousarray(X, dtype=np.int64)
    cdef Py_ssize_t i, n = xs.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] o = out
    with nogil:
        for i in range(n):
            o[i] = _count(A, B, C, xs[i])
    return out


def recurrence_iterate(double y0, double C, double r, long long K):
    """y_{k+1} = y_k + C y_k^{(2-r)/2}; returns (y array, k reached)."""
    out = np.empty(K + 1, dtype=np.float64)
    cdef double[:] y = out
    cdef double e = (2.0 - r) / 2.0
    cdef long long k
    y[0] = y0
    for k in range(K):
        y[k + 1] = y[k] + C * pow(y[k], e)
        if not isfinite(y[k + 1]):
            return out[: k + 1], k
    return out, K
