"""Pure-Python/numpy versions of the compiled kernels.

Signatures and results match ``_kernels`` exactly; only speed differs.
"""

import math

import numpy as np

SAFE_LIMIT = 2 ** 62


def _isqrt_vec(v):
    s = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        s -= (s * s > v).astype(np.int64)
        s += ((s + 1) * (s + 1) <= v).astype(np.int64)
    return s


def fits_int64(A, B, C, X):
    """True when every intermediate of the row scan fits in int64."""
    D = 4 * A * C - B * B
    lim = 4 * A * X
    return lim < SAFE_LIMIT and B * B * lim < SAFE_LIMIT * D


def _count_python(A, B, C, X):
    # arbitrary-precision path, used past the int64 guard
    D = 4 * A * C - B * B
    lim = 4 * A * X
    nmax = math.isqrt(lim // D)
    two_a = 2 * A
    total = 0
    for n in range(-nmax, nmax + 1):
        disc = lim - D * n * n
        if disc < 0:
            continue
        s = math.isqrt(disc)
        total += (s - B * n) // two_a + (s + B * n) // two_a + 1
    return total


def count_int_form(A, B, C, X):
    """Lattice points with A m^2 + B m n + C n^2 <= X (integer form, integer X)."""
    A, B, C, X = int(A), int(B), int(C), int(X)
    if X < 0:
        return 0
    if not fits_int64(A, B, C, X):
        return _count_python(A, B, C, X)
    D = 4 * A * C - B * B
    lim = 4 * A * X
    nmax = math.isqrt(lim // D)
    n = np.arange(-nmax, nmax + 1, dtype=np.int64)
    disc = lim - D * n * n
    s = _isqrt_vec(disc)
    two_a = 2 * A
    rows = np.floor_divide(s - B * n, two_a) + np.floor_divide(s + B * n, two_a) + 1
    return int(rows.sum())


def count_int_form_many(A, B, C, X):
    xs = np.asarray(X, dtype=np.int64)
    return np.array([count_int_form(A, B, C, x) for x in xs], dtype=np.int64)


def recurrence_iterate(y0, C, r, K):
    """y_{k+1} = y_k + C y_k^{(2-r)/2}; returns (y array, k reached)."""
    e = (2.0 - r) / 2.0
    out = np.empty(K + 1, dtype=np.float64)
    y = float(y0)
    out[0] = y
    for k in range(K):
        y = y + C * y ** e
        if not math.isfinite(y):
            return out[: k + 1], k
        out[k + 1] = y
    return out, K
