"""Positive-definite binary quadratic forms: evaluation, exact lattice counts,
remainders against the area term, and the near-level sets G_l.

Two arithmetic modes are supported. Forms built from ints, Fractions or
rational strings ("3/2") are exact: counts are obtained from an integer row
scan with integer square roots, so they are correct for every threshold.
Forms built from floats (e.g. the torus symbol with theta2 = sqrt(2)) are
counted in double precision; any lattice point whose value lies within a
relative band of 2**-40 of the threshold is reported as ambiguous.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from ._util import loglog_fit, stream

GUARD_BAND = 2.0 ** -40


class PrecisionWarning(UserWarning):
    """A lattice point sits inside the float-mode guard band of a threshold."""


def _as_exact(v):
    if isinstance(v, bool):
        raise TypeError("boolean coefficient")
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v.strip())
    return None


@dataclass(frozen=True)
class QuadForm:
    """Q(m, n) = a m^2 + b m n + c n^2 with a > 0 and 4ac - b^2 > 0."""

    a: object
    b: object
    c: object

    def __post_init__(self):
        exact = [_as_exact(v) for v in (self.a, self.b, self.c)]
        if all(e is not None for e in exact):
            coeffs = exact
        else:
            coeffs = [float(v) for v in (self.a, self.b, self.c)]
            if not all(math.isfinite(v) for v in coeffs):
                raise ValueError("non-finite coefficient")
        object.__setattr__(self, "a", coeffs[0])
        object.__setattr__(self, "b", coeffs[1])
        object.__setattr__(self, "c", coeffs[2])
        if not (self.a > 0 and self.discriminant > 0):
            raise ValueError(
                f"form ({self.a}, {self.b}, {self.c}) is not positive definite"
            )

    @property
    def exact(self):
        return isinstance(self.a, Fraction)

    @property
    def discriminant(self):
        """D = 4ac - b^2 (the sign convention that makes D > 0 definite)."""
        return 4 * self.a * self.c - self.b * self.b

    @property
    def area_constant(self):
        """2 pi / sqrt(D): the area of {Q <= 1}."""
        return 2.0 * math.pi / math.sqrt(float(self.discriminant))

    def integer_scaling(self):
        """(L, A, B, C) with L * Q = A m^2 + B m n + C n^2, all integers."""
        if not self.exact:
            raise ValueError("integer scaling needs an exact (rational) form")
        L = math.lcm(self.a.denominator, self.b.denominator, self.c.denominator)
        return L, int(self.a * L), int(self.b * L), int(self.c * L)

    @property
    def integral(self):
        return self.exact and self.integer_scaling()[0] == 1

    @classmethod
    def torus(cls, theta1, theta2):
        """Symbol (theta1 m)^2 + (theta2 n)^2 of the rescaled torus Laplacian."""
        return cls(theta1 * theta1, 0, theta2 * theta2)


@dataclass
class CountResult:
    x: float
    count: int
    main_term: float
    remainder: float
    ambiguous: bool = False


@dataclass
class FitReport:
    slope: float
    intercept: float
    residual: float
    block_centers: list = field(default_factory=list)
    block_maxima: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "block_centers": self.block_centers,
            "block_maxima": self.block_maxima,
            "points": [{"x": x, "remainder": r} for x, r in self.points],
        }


def eval_form(q, m, n):
    """a m^2 + b m n + c n^2; exact Fraction for scalar input in exact mode.

    Array arguments are evaluated elementwise in float64.
    """
    if np.ndim(m) == 0 and np.ndim(n) == 0 and q.exact:
        m, n = int(m), int(n)
        return q.a * m * m + q.b * m * n + q.c * n * n
    m = np.asarray(m, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return float(q.a) * m * m + float(q.b) * m * n + float(q.c) * n * n


def _floor_scaled(L, x):
    return math.floor(L * Fraction(x))


def _ceil_scaled(L, x):
    return math.ceil(L * Fraction(x))


def _count_float(q, x, strict=False):
    """Float-mode row scan. Returns (count, ambiguous)."""
    a, b, c = float(q.a), float(q.b), float(q.c)
    x = float(x)
    if x < 0 or (strict and x == 0):
        return 0, abs(x) <= GUARD_BAND
    D = 4 * a * c - b * b
    nmax = int(math.floor(math.sqrt(4 * a * x / D))) + 1
    n = np.arange(-nmax, nmax + 1, dtype=np.float64)
    disc = np.maximum(4 * a * x - D * n * n, 0.0)
    root = np.sqrt(disc)
    lo = np.ceil((-b * n - root) / (2 * a))
    hi = np.floor((-b * n + root) / (2 * a))

    def inside(m):
        v = a * m * m + b * m * n + c * n * n
        return v < x if strict else v <= x

    # one fix-up step each way against direct evaluation of Q
    hi = np.where(inside(hi + 1), hi + 1, hi)
    hi = np.where(~inside(hi), hi - 1, hi)
    lo = np.where(inside(lo - 1), lo - 1, lo)
    lo = np.where(~inside(lo), lo + 1, lo)
    rows = np.maximum(hi - lo + 1, 0)

    band = GUARD_BAND * max(abs(x), 1.0)
    centre = np.round(-b * n / (2 * a))
    cand = np.concatenate([hi, hi + 1, lo, lo - 1, centre])
    nn = np.tile(n, 5)
    vals = a * cand * cand + b * cand * nn + c * nn * nn
    ambiguous = bool(np.any(np.abs(vals - x) <= band))
    return int(rows.sum()), ambiguous


def _count(q, x, strict=False):
    if q.exact:
        L, A, B, C = q.integer_scaling()
        X = _ceil_scaled(L, x) - 1 if strict else _floor_scaled(L, x)
        return kernels.count_int_form(A, B, C, X), False
    count, ambiguous = _count_float(q, x, strict=strict)
    if ambiguous:
        warnings.warn(
            f"lattice point within guard band of threshold {x!r}", PrecisionWarning, stacklevel=3
        )
    return count, ambiguous


def count_leq(q, x):
    """#{(m, n) in Z^2 : Q(m, n) <= x}, by O(sqrt(x)) row scans."""
    return _count(q, x)[0]


def count_less(q, x):
    """#{(m, n) in Z^2 : Q(m, n) < x}."""
    return _count(q, x, strict=True)[0]


def main_term(q, x):
    return q.area_constant * float(x)


def remainder(q, x):
    return count_leq(q, x) - main_term(q, x)


def count(q, x):
    """Count, area term and remainder together, with float-mode diagnostics."""
    n, ambiguous = _count(q, x)
    mt = main_term(q, x) if float(x) >= 0 else 0.0
    return CountResult(float(x), n, mt, n - mt, ambiguous)


def count_many(q, xs):
    """count_leq over an array of thresholds (vectorised for exact forms)."""
    xs = list(xs)
    if q.exact:
        L, A, B, C = q.integer_scaling()
        X = [_floor_scaled(L, x) for x in xs]
        return np.array([int(v) for v in kernels.count_int_form_many(A, B, C, X)], dtype=object)
    return np.array([count_leq(q, x) for x in xs], dtype=object)


def annulus_count(q, l):
    """|G_l| with G_l = {a in Z^2 : |Q(a) - l| <= 1}.

    Closed outer cut Q <= l + 1, open inner cut Q < l - 1.
    """
    return count_leq(q, l + 1) - count_less(q, l - 1)


def representation_counts(q, kmax):
    """r[k] = #{Q(m, n) = k} for 0 <= k <= kmax (integer-coefficient forms)."""
    if not q.integral:
        raise ValueError("representation counts need integer coefficients")
    _, A, B, C = q.integer_scaling()
    kmax = int(kmax)
    r = np.zeros(kmax + 1, dtype=np.int64)
    if kmax < 0:
        return r
    D = 4 * A * C - B * B
    lim = 4 * A * kmax
    nmax = math.isqrt(lim // D)
    chunks = []
    for n in range(-nmax, nmax + 1):
        s = math.isqrt(lim - D * n * n)
        lo = -((s + B * n) // (2 * A))
        hi = (s - B * n) // (2 * A)
        if hi < lo:
            continue
        m = np.arange(lo, hi + 1, dtype=np.int64)
        chunks.append(A * m * m + B * m * n + C * n * n)
    r += np.bincount(np.concatenate(chunks), minlength=kmax + 1)[: kmax + 1]
    return r


def annulus_scan(q, l_max):
    """|G_l| for every integer l in [0, l_max] (integer-coefficient forms).

    For integer-valued Q the supremum of |G_l| over real l is attained at
    integer l, where G_l collects the levels l - 1, l, l + 1.
    """
    l_max = int(l_max)
    r = representation_counts(q, l_max + 1)
    g = r[: l_max + 1].copy()
    g[1:] += r[: l_max]
    g += r[1 : l_max + 2]
    return g


def annulus_block_fit(q, l_max, first_block=8):
    """Dyadic-block maxima of |G_l| over [first_block, l_max] and their log-log slope."""
    g = annulus_scan(q, l_max)
    centers, maxima = [], []
    lo = int(first_block)
    while lo * 2 <= l_max + 1:
        hi = lo * 2
        centers.append(math.sqrt(lo * hi))
        maxima.append(int(g[lo:hi].max()))
        lo = hi
    fit = loglog_fit(centers, maxima, min_points=3)
    return FitReport(fit.slope, fit.intercept, fit.residual, centers, maxima,
                     list(zip(centers, maxima)))


def fit_remainder_exponent(q, x_min, x_max, blocks_per_decade=4, samples_per_block=200,
                           seed=0, remainder_fn=None):
    """Fit sup |R(x)| ~ x^slope from sampled geometric blocks.

    ``remainder_fn`` (array of x -> array of R) replaces the exact remainder;
    it exists so the fit can be checked on synthetic power laws.
    """
    if not (1 <= x_min < x_max):
        raise ValueError("need 1 <= x_min < x_max")
    if blocks_per_decade < 1 or samples_per_block < 1:
        raise ValueError("blocks_per_decade and samples_per_block must be >= 1")
    n_blocks = int(math.ceil(math.log10(x_max / x_min) * blocks_per_decade - 1e-12))
    if n_blocks < 3:
        raise ValueError(f"degenerate fit: only {n_blocks} blocks")
    edges = np.geomspace(x_min, x_max, n_blocks + 1)
    centers, maxima, points = [], [], []
    for i in range(n_blocks):
        lo, hi = edges[i], edges[i + 1]
        # the upper edge is always sampled so monotone envelopes fit exactly
        xs = np.sort(np.append(stream(seed, i).uniform(lo, hi, samples_per_block), hi))
        if remainder_fn is not None:
            rem = np.asarray(remainder_fn(xs), dtype=float)
        else:
            counts = count_many(q, xs).astype(float)
            rem = counts - q.area_constant * xs
        absr = np.abs(rem)
        centers.append(float(math.sqrt(lo * hi)))
        maxima.append(float(absr.max()))
        points.extend(zip(xs.tolist(), rem.tolist()))
    fit = loglog_fit(centers, maxima, min_points=3)
    return FitReport(fit.slope, fit.intercept, fit.residual, centers, maxima, points)
