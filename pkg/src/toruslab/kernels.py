"""Kernel backend selection.

The compiled Cython extension is used when it imports; otherwise the numpy
fallback is used. Set ``TORUSLAB_PURE=1`` to force the fallback.
"""

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("TORUSLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

SAFE_LIMIT = _fallback.SAFE_LIMIT


def count_int_form(A, B, C, X):
    A, B, C, X = int(A), int(B), int(C), int(X)
    if X < 0:
        return 0
    if _impl is _fallback or not _fallback.fits_int64(A, B, C, X):
        return _fallback.count_int_form(A, B, C, X)
    return int(_impl.count_int_form(A, B, C, X))


def count_int_form_many(A, B, C, X):
    xs = np.asarray(X, dtype=object)
    if _impl is not _fallback and all(
        _fallback.fits_int64(int(A), int(B), int(C), max(int(x), 0)) for x in xs
    ):
        return _impl.count_int_form_many(int(A), int(B), int(C), np.asarray(X, dtype=np.int64))
    return np.array([count_int_form(A, B, C, x) for x in xs], dtype=object)


def recurrence_iterate(y0, C, r, K):
    return _impl.recurrence_iterate(float(y0), float(C), float(r), int(K))
