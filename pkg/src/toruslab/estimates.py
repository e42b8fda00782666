"""Empirical measurement of linear/bilinear Strichartz ratios, the
exponential-sum bound and quadrilinear orthogonality on the torus.

Time integrals run over the unit window t in [0, 1] with uniform left
Riemann sampling. Every value is computed at n and 2n samples (the 2n grid
contains the n grid, so the refinement costs one extra pass), and the
relative change is recorded as the refinement delta.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np
import scipy.fft as sfft

from . import spectral
from ._util import loglog_fit, n_threads, stream, write_csv, write_json
from .spectral import TWO_PI, Field, FourierGrid, TorusGeometry

S0 = Fraction(131, 416)
STRICHARTZ_EXPONENT = S0 / 2  # 131/832
REFINEMENT_TOL = 0.01


@dataclass(frozen=True)
class SweepConfig:
    N_list: tuple = (8, 16, 32, 64)
    ensemble_size: int = 200
    seed: int = 0
    n_time_samples: int = 64
    time_interval: tuple = (0.0, 1.0)

    def __post_init__(self):
        N = list(self.N_list)
        if not N or any(n < 1 or n & (n - 1) for n in N):
            raise ValueError("N_list must hold dyadic integers")
        if any(b <= a for a, b in zip(N, N[1:])):
            raise ValueError("N_list must be strictly increasing")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.n_time_samples < 16:
            raise ValueError("n_time_samples must be >= 16")
        if tuple(self.time_interval) != (0.0, 1.0):
            raise ValueError("the time window is fixed to [0, 1]")


@dataclass
class RatioRecord:
    N: object
    max_ratio: float
    argmax_seed: int
    refinement_delta: float
    flagged: bool = False


@dataclass
class SweepResult:
    records: list
    fitted_exponent: float
    intercept: float
    paper_bound: float
    extra: dict = field(default_factory=dict)

    def summary(self):
        out = {
            "fitted_exponent": self.fitted_exponent,
            "intercept": self.intercept,
            "paper_bound": self.paper_bound,
            "records": [asdict(r) for r in self.records],
        }
        out.update(self.extra)
        return out


def _compact(u):
    """Coefficients on the smallest centred box holding u's support."""
    R = u.support_radius
    k = u.grid.k
    keep = np.abs(k) <= R
    ks = k[keep]
    c = u.coeffs[np.ix_(keep, keep)]
    Q = u.grid.Q[np.ix_(keep, keep)]
    return c, ks, Q, R


def _collocation_size(bandwidth):
    return max(int(sfft.next_fast_len(int(bandwidth) + 1)), 2)


def _time_grid(n):
    return np.arange(2 * n) / (2.0 * n)


def _refined(per_time, n, power):
    """Norm from per-time integrals at n and 2n samples, with refinement delta."""
    coarse = np.mean(per_time[::2]) ** (1.0 / power)
    fine = np.mean(per_time) ** (1.0 / power)
    delta = abs(fine - coarse) / fine if fine > 0 else 0.0
    return float(fine), float(delta)


def _flow_values(c, ks, Q, ts, P, chunk, workers):
    """Yield collocation values of e^{it Lap} u for chunks of times."""
    for lo in range(0, len(ts), chunk):
        t = ts[lo:lo + chunk]
        batch = c[None] * np.exp(-1j * t[:, None, None] * Q[None])
        yield spectral.coeffs_to_grid(batch, ks, P, workers=workers)


def lp_spacetime_norm(u0, p=4, n_time_samples=64, return_delta=False, chunk=16, workers=None):
    """||e^{it Lap} u0||_{L^4_t L^4_x([0,1] x T^2)}.

    Spatial L^4 is exact: the collocation grid exceeds the bandwidth of |u|^4.
    """
    if p != 4:
        raise ValueError("only p = 4 is implemented")
    c, ks, Q, R = _compact(u0)
    P = _collocation_size(4 * R)
    ts = _time_grid(n_time_samples)
    per_time = np.concatenate([
        TWO_PI ** 2 * np.mean(np.abs(v) ** 4, axis=(1, 2))
        for v in _flow_values(c, ks, Q, ts, P, chunk, workers)
    ])
    value, delta = _refined(per_time, n_time_samples, 4)
    return (value, delta) if return_delta else value


def _require_ball(u, N):
    if np.any((u.coeffs != 0) & (u.grid.abs_m > N)):
        raise ValueError(f"field support leaves the ball of radius {N}")


def strichartz_ratio(u0, N, cfg=None, return_delta=False):
    """||e^{it Lap} u0||_{L^4} / ||u0||_{L^2} for u0 supported in B(0, N)."""
    cfg = cfg or SweepConfig()
    l2 = spectral.l2_norm(u0)
    if l2 == 0:
        raise ValueError("zero field")
    _require_ball(u0, N)
    v, d = lp_spacetime_norm(u0, 4, cfg.n_time_samples, return_delta=True)
    return (v / l2, d) if return_delta else v / l2


def ball_grid(N, geometry=None):
    return FourierGrid(geometry or TorusGeometry(), 2 * int(N) + 2)


def _ensemble(fn, n, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def _max_record(key, values, deltas):
    values = np.asarray(values)
    i = int(np.argmax(values))
    d = float(np.max(deltas))
    return RatioRecord(key, float(values[i]), i, d, d > REFINEMENT_TOL)


def strichartz_sweep(cfg=None, geometry=None, threads=None, ratios_fn=None):
    """Per-N ensemble maxima of the L^4 Strichartz ratio and their N-exponent.

    Members are unimodular random-phase fields on B(0, N), member i of size N
    drawn from stream (seed, N, i). ``ratios_fn(N) -> ratios`` replaces the
    measurement, to check the fit on synthetic input.
    """
    cfg = cfg or SweepConfig()
    geometry = geometry or TorusGeometry()
    threads = n_threads(threads)
    s_half = float(STRICHARTZ_EXPONENT)
    records, sob = [], {}
    for N in cfg.N_list:
        if ratios_fn is not None:
            vals = np.asarray(ratios_fn(N), dtype=float)
            records.append(_max_record(N, vals, np.zeros_like(vals)))
            continue
        grid = ball_grid(N, geometry)

        def member(i, N=N, grid=grid):
            u = spectral.random_phase_field(grid, N, stream(cfg.seed, N, i), "ball")
            lp, d = lp_spacetime_norm(u, 4, cfg.n_time_samples, return_delta=True)
            return lp / spectral.l2_norm(u), d, lp / spectral.sobolev_norm(u, s_half, "bracket")

        out = _ensemble(member, cfg.ensemble_size, threads)
        ratios, deltas, sobolev = zip(*out)
        records.append(_max_record(N, ratios, deltas))
        sob[N] = float(np.max(sobolev))
    fit = loglog_fit([r.N for r in records], [r.max_ratio for r in records])
    return SweepResult(
        records, fit.slope, fit.intercept, float(STRICHARTZ_EXPONENT),
        {"sobolev_form_max_ratio": sob, "fit_residual": fit.residual},
    )


def bilinear_ratio(u1, u2, cfg=None, N1=None, N2=None, return_delta=False, chunk=16, workers=None):
    """||e^{it Lap}u1 e^{it Lap}u2||_{L^2_t L^2_x} / (||u1|| ||u2||)."""
    cfg = cfg or SweepConfig()
    n1, n2 = spectral.l2_norm(u1), spectral.l2_norm(u2)
    if n1 == 0 or n2 == 0:
        raise ValueError("zero input field")
    if N1 is not None and N2 is not None:
        if N1 > N2:
            raise ValueError("need N1 <= N2")
        _require_ball(u1, N1)
        _require_ball(u2, N2)
    R = max(u1.support_radius, u2.support_radius)
    P = _collocation_size(2 * (u1.support_radius + u2.support_radius))
    k = u1.grid.k
    keep = np.abs(k) <= R
    ks = k[keep]
    c1 = u1.coeffs[np.ix_(keep, keep)]
    c2 = u2.coeffs[np.ix_(keep, keep)]
    Q = u1.grid.Q[np.ix_(keep, keep)]
    ts = _time_grid(cfg.n_time_samples)
    per_time = []
    for v1, v2 in zip(_flow_values(c1, ks, Q, ts, P, chunk, workers),
                      _flow_values(c2, ks, Q, ts, P, chunk, workers)):
        per_time.append(TWO_PI ** 2 * np.mean(np.abs(v1 * v2) ** 2, axis=(1, 2)))
    value, delta = _refined(np.concatenate(per_time), cfg.n_time_samples, 2)
    r = value / (n1 * n2)
    return (r, delta) if return_delta else r


def bilinear_sweep(N1, N2_list, cfg=None, geometry=None, threads=None):
    """Ensemble maxima of the bilinear ratio at fixed N1 across N2."""
    cfg = cfg or SweepConfig()
    geometry = geometry or TorusGeometry()
    threads = n_threads(threads)
    records = []
    for N2 in N2_list:
        grid = ball_grid(max(N1, N2), geometry)

        def member(i, N2=N2, grid=grid):
            rng = stream(cfg.seed, N1, N2, i)
            u1 = spectral.random_phase_field(grid, N1, rng, "ball")
            u2 = spectral.random_phase_field(grid, N2, rng, "ball")
            return bilinear_ratio(u1, u2, cfg, N1, N2, return_delta=True)

        ratios, deltas = zip(*_ensemble(member, cfg.ensemble_size, threads))
        records.append(_max_record((N1, N2), ratios, deltas))
    maxima = [r.max_ratio for r in records]
    spread = max(maxima) / min(maxima)
    fit = loglog_fit([r.N[1] for r in records], maxima) if len(records) > 1 else None
    return SweepResult(
        records, fit.slope if fit else 0.0, fit.intercept if fit else 0.0, float(S0),
        {"n2_spread": spread},
    )


# --- exponential sums -------------------------------------------------------

@dataclass
class ExpSumResult:
    lhs: float
    rhs: float
    ratio: float


def exp_sum_lhs(a, b):
    """int_0^1 |sum_n b_n e^{i t a_n}|^2 dt in closed form."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=complex)
    d = a[:, None] - a[None, :]
    # (e^{id} - 1)/(id) = e^{id/2} sin(d/2)/(d/2), stable at d -> 0
    phi = np.exp(0.5j * d) * np.sinc(d / TWO_PI)
    return float(np.real(b @ phi @ np.conj(b)))


def exp_sum_rhs(a, b):
    """sum_j (sum_{|a_n - j| <= 1/2} |b_n|)^2; ties at 1/2 go to the lower j."""
    a = np.asarray(a, dtype=float)
    j = np.ceil(a - 0.5).astype(np.int64)
    _, inv = np.unique(j, return_inverse=True)
    sums = np.bincount(inv.ravel(), weights=np.abs(np.asarray(b)))
    return float(np.sum(sums ** 2))


def exp_sum_check(a, b):
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    if a.size == 0 or a.size != b.size:
        raise ValueError("need equal-length, non-empty frequency and coefficient lists")
    lhs, rhs = exp_sum_lhs(a, b), exp_sum_rhs(a, b)
    return ExpSumResult(lhs, rhs, lhs / rhs)


def random_exp_sum_instances(n_instances, seed=0, n_max=64, a_max=100.0):
    """Random (a, b) pairs: n <= n_max frequencies in [-a_max, a_max], unimodular b."""
    for i in range(n_instances):
        rng = stream(seed, i)
        n = int(rng.integers(1, n_max + 1))
        a = rng.uniform(-a_max, a_max, n)
        b = np.exp(1j * rng.uniform(0, TWO_PI, n))
        yield a, b


# --- quadrilinear orthogonality ---------------------------------------------

@dataclass
class VanishResult:
    integral: complex
    predicted_zero: bool
    norm_product: float
    ok: bool


def _pair_sums(u, v, values=True):
    """Dense table over s = m + n of sum u_m v_n (or of the pair count)."""
    M = u.grid.M
    iu = np.flatnonzero(u.coeffs.ravel())
    iv = np.flatnonzero(v.coeffs.ravel())
    m1, m2 = u.grid.m1.ravel(), u.grid.m2.ravel()
    s1 = (m1[iu][:, None] + m1[iv][None, :]).ravel() + M
    s2 = (m2[iu][:, None] + m2[iv][None, :]).ravel() + M
    table = np.zeros((2 * M + 1, 2 * M + 1), dtype=np.complex128 if values else np.int64)
    if values:
        w = (u.coeffs.ravel()[iu][:, None] * v.coeffs.ravel()[iv][None, :]).ravel()
    else:
        w = np.ones(s1.size, dtype=np.int64)
    np.add.at(table, (s1, s2), w)
    return table


def quadrilinear_integral(u1, u2, u3, u4):
    """int_{T^2} u1 u2 u3 u4 dx as an exact sum over zero-sum frequency quadruples."""
    a = _pair_sums(u1, u2)
    b = _pair_sums(u3, u4)
    # pair s from (u1, u2) meets -s from (u3, u4); flip both axes of b
    return complex(TWO_PI ** 2 * np.sum(a * b[::-1, ::-1]))


def quadrilinear_collocation(u1, u2, u3, u4, oversample=4):
    vals = [spectral.synthesize(u, oversample) for u in (u1, u2, u3, u4)]
    return complex(TWO_PI ** 2 * np.mean(vals[0] * vals[1] * vals[2] * vals[3]))


def quadrilinear_vanish_check(u1, u2, u3, u4, tol=1e-12):
    """Evaluate the quadrilinear integral and whether it must vanish.

    ``predicted_zero`` holds when no quadruple of supporting frequencies sums
    to zero; then the integral is asserted to be below tol * prod ||u_i||.
    """
    grids = {u.grid for u in (u1, u2, u3, u4)}
    if len(grids) != 1:
        raise ValueError("fields must share a grid")
    a = _pair_sums(u1, u2, values=False)
    b = _pair_sums(u3, u4, values=False)
    predicted_zero = not bool(np.any((a > 0) & (b[::-1, ::-1] > 0)))
    val = quadrilinear_integral(u1, u2, u3, u4)
    norm = float(np.prod([spectral.l2_norm(u) for u in (u1, u2, u3, u4)]))
    ok = abs(val) <= tol * norm if predicted_zero else True
    return VanishResult(val, predicted_zero, norm, ok)


def dominant_first_component(freqs):
    """|m_1| > 4 max(|n_1|, |j_1|, |l_1|) or the same for second components."""
    m, *rest = freqs
    return any(abs(m[i]) > 4 * max(abs(r[i]) for r in rest) for i in (0, 1))


def vanish_configs(n, seed=0, violating=True, radius=3, M=64, geometry=None):
    """Random quadruples of fields for the orthogonality check.

    violating: u2, u3, u4 have a few random modes in the box |m_i| <= radius
    and u1 is one mode whose first component exceeds 4 * radius (in either
    slot), so no supporting quadruple can sum to zero. Otherwise four single
    modes with zero frequency sum, whose integral is (2 pi)^2 prod c_i.
    """
    grid = FourierGrid(geometry or TorusGeometry(), M)
    top = M // 2 - 1
    for i in range(n):
        rng = stream(seed, int(violating), i)
        if violating:
            fields = []
            for _ in range(3):
                c = np.zeros(grid.shape, dtype=np.complex128)
                for _ in range(int(rng.integers(1, 6))):
                    m = tuple(int(v) for v in rng.integers(-radius, radius + 1, 2))
                    c[grid.index(m)] = complex(*rng.standard_normal(2))
                fields.append(Field(grid, c))
            big = int(rng.integers(4 * radius + 1, top + 1)) * int(rng.choice([-1, 1]))
            other = int(rng.integers(-top, top + 1))
            m = (big, other) if rng.random() < 0.5 else (other, big)
            fields.insert(0, Field.mode(grid, m, complex(*rng.standard_normal(2))))
            yield tuple(fields), None
        else:
            ms = [tuple(int(v) for v in rng.integers(-top // 3, top // 3 + 1, 2)) for _ in range(3)]
            ms.append((-sum(m[0] for m in ms), -sum(m[1] for m in ms)))
            cs = [complex(*rng.standard_normal(2)) for _ in range(4)]
            fields = tuple(Field.mode(grid, m, c) for m, c in zip(ms, cs))
            yield fields, complex(TWO_PI ** 2 * np.prod(cs))


def write_sweep(result, out_dir, bilinear=False):
    rows = []
    for r in result.records:
        key = list(r.N) if isinstance(r.N, tuple) else [r.N]
        rows.append(key + [r.max_ratio, r.argmax_seed, r.refinement_delta])
    header = (["N1", "N2"] if bilinear else ["N"]) + ["max_ratio", "argmax_seed", "refinement_delta"]
    write_csv(f"{out_dir}/sweep.csv", header, rows)
    write_json(f"{out_dir}/summary.json", result.summary())

