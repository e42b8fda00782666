"""Windowed space-time fields and discrete X^{s,b} norms.

A trajectory sampled on [0, 1] is extended to [-1, 2], multiplied by a
raised-cosine window that equals 1 on [0, 1] and vanishes at -1 and 2, and
Fourier transformed in time. The transform is stored in the interaction
picture: for each spatial mode m we keep the transform of the profile
exp(+itQ(m)) U(m, t), whose frequency variable sigma = tau + Q(m) is the
modulation (distance from the free dispersion relation tau = -Q(m) of the
propagator exp(-itQ)). Free solutions therefore sit at sigma ~ 0 whatever
their spatial frequency, and the time grid only has to resolve the
modulation, not Q(m) itself.

Conventions: U_hat(m, tau) = int exp(-i t tau) U(m, t) dt, and

    ||U||_{X^{s,b}}^2 = (2 pi)^2 sum_m int <|m1|+|m2|>^{2s} <tau + Q(m)>^{2b}
                        |U_hat(m, tau)|^2 dtau / (2 pi),

so that s = b = 0 gives the space-time L^2 norm of the windowed field.
The fixed-window lift is an upper-bound surrogate for the restricted
(infimum over extensions) norm.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import spectral
from ._util import loglog_fit, stream
from .estimates import S0, REFINEMENT_TOL, _collocation_size, _refined
from .spectral import TWO_PI, Field, FourierGrid, TorusGeometry, bracket

MIN_SAMPLES = 64


@dataclass(frozen=True)
class XsbParams:
    s: float = 0.0
    b: float = 0.55
    b_prime: float = 0.45
    strict: bool = False

    def __post_init__(self):
        if self.strict and not self.in_contraction_regime():
            raise ValueError(
                f"need 1/4 < b' < 1/2 < b and b + b' < 1, got b={self.b}, b'={self.b_prime}"
            )

    def in_contraction_regime(self):
        return 0.25 < self.b_prime < 0.5 < self.b and self.b + self.b_prime < 1


def window(t):
    """Raised cosine: 0 at t = -1 and t = 2, identically 1 on [0, 1]."""
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    rise = (t >= -1) & (t < 0)
    fall = (t > 1) & (t <= 2)
    w[rise] = 0.5 * (1 - np.cos(np.pi * (t[rise] + 1)))
    w[(t >= 0) & (t <= 1)] = 1.0
    w[fall] = 0.5 * (1 + np.cos(np.pi * (t[fall] - 1)))
    return w


@dataclass(eq=False)
class SpaceTimeField:
    """Windowed time transform of a trajectory, kept on a mode support.

    ``data[k, j]`` is the profile transform at modulation ``sigma[k]`` for the
    j-th mode of ``mask`` (row-major order).
    """

    grid: FourierGrid
    n_t: int
    mask: np.ndarray
    data: np.ndarray
    undersampled: bool = False

    @property
    def h(self):
        return 1.0 / (self.n_t - 1)

    @property
    def n_tau(self):
        return self.data.shape[0]

    @property
    def t0(self):
        return -1.0

    @property
    def sigma(self):
        return TWO_PI * np.fft.fftfreq(self.n_tau, self.h)

    @property
    def dsigma(self):
        return TWO_PI / (self.n_tau * self.h)

    @property
    def Q(self):
        return self.grid.Q[self.mask]

    @property
    def m1(self):
        return self.grid.m1[self.mask]

    @property
    def m2(self):
        return self.grid.m2[self.mask]

    def tau(self):
        """Physical time frequencies tau = sigma - Q(m), shape (n_tau, modes)."""
        return self.sigma[:, None] - self.Q[None, :]

    def with_data(self, data):
        return SpaceTimeField(self.grid, self.n_t, self.mask, data, self.undersampled)

    def profile_samples(self):
        """Windowed profile on the padded time grid, shape (n_tau, modes)."""
        phase = np.exp(1j * self.t0 * self.sigma)[:, None]
        return sfft.ifft(self.data * phase, axis=0) / self.h

    def samples(self):
        """Trajectory coefficients at t_j = j/(n_t - 1), j = 0..n_t-1 (dense, (n_t, M, M))."""
        prof = self.profile_samples()
        n1 = self.n_t - 1
        ts = np.arange(self.n_t) * self.h
        sl = prof[n1: 2 * n1 + 1]
        out = np.zeros((self.n_t,) + self.grid.shape, dtype=np.complex128)
        out[:, self.mask] = sl * np.exp(-1j * ts[:, None] * self.Q[None, :])
        return out

    def padded_times(self):
        return self.t0 + np.arange(self.n_tau) * self.h

    def physical_samples(self):
        """Windowed physical coefficients on the padded grid, (n_tau, modes)."""
        t = self.padded_times()
        return self.profile_samples() * np.exp(-1j * t[:, None] * self.Q[None, :])


def _profile_from_samples(samples, Q, ts, extend):
    """Profile exp(itQ)U on the padded grid [-1, 2) from samples on [0, 1]."""
    n_t = samples.shape[0]
    n1 = n_t - 1
    h = 1.0 / n1
    L = 3 * n1 + 1
    t = -1.0 + np.arange(L) * h
    prof = np.empty((L, samples.shape[1]), dtype=np.complex128)
    inner = samples * np.exp(1j * ts[:, None] * Q[None, :])
    prof[n1: 2 * n1 + 1] = inner
    left, right = t[:n1], t[2 * n1 + 1:]
    if extend == "free":
        prof[:n1] = inner[0][None, :]
        prof[2 * n1 + 1:] = inner[-1][None, :]
    elif extend == "constant":
        prof[:n1] = samples[0][None, :] * np.exp(1j * left[:, None] * Q[None, :])
        prof[2 * n1 + 1:] = samples[-1][None, :] * np.exp(1j * right[:, None] * Q[None, :])
    else:
        raise ValueError(f"unknown extension {extend!r}")
    return t, prof


def lift_profile(profile, grid, mask, n_t, undersampled=False):
    """Transform a windowed-ready profile given on the padded grid (L, modes)."""
    h = 1.0 / (n_t - 1)
    L = profile.shape[0]
    t = -1.0 + np.arange(L) * h
    n_tau = 4 * n_t
    buf = np.zeros((n_tau, profile.shape[1]), dtype=np.complex128)
    buf[:L] = window(t)[:, None] * profile
    sigma = TWO_PI * np.fft.fftfreq(n_tau, h)
    data = h * np.exp(-1j * t[0] * sigma)[:, None] * sfft.fft(buf, axis=0)
    return SpaceTimeField(grid, n_t, mask, data, undersampled)


def lift(trajectory, grid=None, extend="free", mask=None):
    """Windowed time transform of coefficients sampled uniformly on [0, 1].

    ``trajectory`` is a list of Fields or an array (n_t, M, M) at times
    j/(n_t - 1). ``extend`` chooses the continuation outside [0, 1]: "free"
    continues each mode with the free propagator from the end points,
    "constant" holds the end values fixed.
    """
    if isinstance(trajectory, (list, tuple)) and trajectory and isinstance(trajectory[0], Field):
        grid = trajectory[0].grid
        arr = np.stack([f.coeffs for f in trajectory])
    else:
        arr = np.asarray(trajectory, dtype=np.complex128)
    if grid is None:
        raise ValueError("grid required for array input")
    n_t = arr.shape[0]
    if n_t < 2:
        raise ValueError("need at least two time samples")
    undersampled = n_t < MIN_SAMPLES
    if undersampled:
        warnings.warn(f"only {n_t} time samples (< {MIN_SAMPLES})", RuntimeWarning, stacklevel=2)
    if mask is None:
        mask = np.ones(grid.shape, dtype=bool)
    ts = np.arange(n_t) / (n_t - 1)
    _, prof = _profile_from_samples(arr[:, mask], grid.Q[mask], ts, extend)
    return lift_profile(prof, grid, mask, n_t, undersampled)


def lift_free(u0, n_t=MIN_SAMPLES, dressing=None):
    """Lift of g(t) e^{it Lap} u0 on its support; ``dressing`` is g (default 1).

    The profile is g(t) u0_hat(m), extended by the free flow outside [0, 1].
    """
    mask = u0.coeffs != 0
    if not mask.any():
        mask = np.zeros(u0.grid.shape, dtype=bool)
        mask.flat[0] = True
    h = 1.0 / (n_t - 1)
    L = 3 * (n_t - 1) + 1
    t = -1.0 + np.arange(L) * h
    g = np.ones(L, dtype=np.complex128) if dressing is None else np.asarray(dressing(np.clip(t, 0, 1)), dtype=complex)
    prof = g[:, None] * u0.coeffs[mask][None, :]
    return lift_profile(prof, u0.grid, mask, n_t, n_t < MIN_SAMPLES)


def window_norm(b, n_t=MIN_SAMPLES):
    """||<tau>^b w_hat||_{L^2(dtau / 2pi)} on the lift's discrete grid."""
    g = FourierGrid(TorusGeometry(), 2)
    U = lift_free(Field.mode(g, (0, 0)), n_t)
    return float(np.sqrt(np.sum(bracket(U.sigma) ** (2 * b) * np.abs(U.data[:, 0]) ** 2) * U.dsigma / TWO_PI))


def xsb_norm(U, s=0.0, b=0.0):
    ws = bracket(np.abs(U.m1) + np.abs(U.m2)) ** (2 * s)
    wb = bracket(U.sigma) ** (2 * b)
    total = np.sum(wb[:, None] * ws[None, :] * np.abs(U.data) ** 2)
    return TWO_PI * float(np.sqrt(total * U.dsigma / TWO_PI))


def spacetime_l2_direct(U):
    """||w U||_{L^2(R x T^2)} by quadrature of the padded time samples."""
    phys = U.physical_samples()
    return TWO_PI * float(np.sqrt(U.h * np.sum(np.abs(phys) ** 2)))


def _dyadic_index(x):
    """k with 2^k <= x < 2^(k+1), for x >= 1."""
    k = np.floor(np.log2(x)).astype(np.int64)
    k -= (2.0 ** k > x)
    k += (2.0 ** (k + 1) <= x)
    return k


def dyadic_decompose(U):
    """Split U into pieces with N <= <Q>^(1/2) < 2N and L <= <sigma> < 2L.

    Returns {(N, L): SpaceTimeField}; every coefficient lands in exactly one
    piece, so the pieces sum to U bit for bit.
    """
    kn = _dyadic_index(np.sqrt(bracket(U.Q)))
    kl = _dyadic_index(bracket(U.sigma))
    pieces = {}
    present = U.data != 0
    for a in np.unique(kn):
        for c in np.unique(kl):
            sel = (kl[:, None] == c) & (kn[None, :] == a)
            if not np.any(sel & present):
                continue
            pieces[(int(2 ** a), int(2 ** c))] = U.with_data(np.where(sel, U.data, 0))
    return pieces


def reconstruct(pieces, like):
    total = np.zeros_like(like.data)
    for p in pieces.values():
        total = total + p.data
    return like.with_data(total)


def _dense_physical(U, times_idx):
    """Dense (len(idx), M, M) physical coefficients at chosen padded-grid indices."""
    phys = U.physical_samples()[times_idx]
    out = np.zeros((len(times_idx),) + U.grid.shape, dtype=np.complex128)
    out[:, U.mask] = phys
    return out


def quadrilinear_form(u1, u2, u3, u4, domain="unit", oversample=4):
    """Integral of u1 u2 conj(u3) u4 over time and T^2 by collocation.

    domain="unit": t in [0, 1], trapezoid over the trajectory samples.
    domain="window": the windowed fields over the whole padded line,
    rectangle rule on the periodic padded grid.
    """
    fields = (u1, u2, u3, u4)
    grid = u1.grid
    if any(f.grid != grid or f.n_t != u1.n_t or f.n_tau != u1.n_tau for f in fields):
        raise ValueError("space-time fields must share grids")
    n1 = u1.n_t - 1
    if domain == "unit":
        idx = np.arange(n1, 2 * n1 + 1)
        wts = np.full(idx.size, u1.h)
        wts[[0, -1]] *= 0.5
    elif domain == "window":
        idx = np.arange(u1.n_tau)
        wts = np.full(idx.size, u1.h)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    P = oversample * grid.M
    vals = [spectral.coeffs_to_grid(_dense_physical(f, idx), grid.k, P) for f in fields]
    prod = vals[0] * vals[1] * np.conj(vals[2]) * vals[3]
    per_t = TWO_PI ** 2 * np.mean(prod, axis=(1, 2))
    return complex(np.sum(wts * per_t))


def quadrilinear_form_spectral(u1, u2, u3, u4):
    """Window-domain quadrilinear integral from the frequency side.

    Sums F1(m1,k1) F2(m2,k2) conj(F3(m3,k3)) F4(m4,k4) over
    m1 + m2 - m3 + m4 = 0 and k1 + k2 - k3 + k4 = 0 (mod n_tau), where F are
    the discrete time transforms of the windowed physical samples. Direct
    sums: only for small supports.
    """
    n = u1.n_tau
    F = [sfft.fft(f.physical_samples(), axis=0) for f in (u1, u2, u3, u4)]
    ms = [list(zip(f.m1.tolist(), f.m2.tolist())) for f in (u1, u2, u3, u4)]
    shifts = np.arange(n)
    total = 0j
    for i1, a in enumerate(ms[0]):
        for i2, b in enumerate(ms[1]):
            for i3, c in enumerate(ms[2]):
                d = (c[0] - a[0] - b[0], c[1] - a[1] - b[1])
                if d not in ms[3]:
                    continue
                i4 = ms[3].index(d)
                f1, f2, f3, f4 = F[0][:, i1], F[1][:, i2], np.conj(F[2][:, i3]), F[3][:, i4]
                # c12[s] = sum_k f1[k] f2[s - k]; c34[s] = sum_k f3[k] f4[s + k]... direct loops
                c12 = np.array([np.sum(f1 * f2[(s - shifts) % n]) for s in range(n)])
                c34 = np.array([np.sum(f3 * f4[(s + shifts) % n]) for s in range(n)])
                # k1 + k2 = s and k4 - k3 = -s
                total += np.sum(c12 * c34[(-shifts) % n])
    return complex(TWO_PI ** 2 * u1.h * total / n ** 3)


# --- localized product estimate ----------------------------------------------

@dataclass
class ProductRecord:
    N1: int
    N2: int
    max_ratio: float
    argmax_seed: int
    refinement_delta: float
    flagged: bool = False


@dataclass
class ProductSweep:
    records: list
    n1_exponent: float
    intercept: float
    n2_spread: dict = field(default_factory=dict)
    b_prime: float = 0.45
    paper_bound: float = float(S0)

    def summary(self):
        return {
            "b_prime": self.b_prime,
            "n1_exponent": self.n1_exponent,
            "intercept": self.intercept,
            "n2_spread": self.n2_spread,
            "paper_bound": self.paper_bound,
        }


def shell_grid(N, geometry=None):
    geometry = geometry or TorusGeometry()
    r = 2 * N / min(geometry.theta1, geometry.theta2)
    return FourierGrid(geometry, 2 * int(math.ceil(r)) + 2)


def _product_l2(c1, c2, ks, Q, g1, g2, n, P):
    """||u1 u2||_{L^2([0,1] x T^2)} with u_i = g_i(t) e^{it Lap} u_i0, and its delta."""
    ts = np.arange(2 * n) / (2.0 * n)
    per = []
    for lo in range(0, ts.size, 16):
        t = ts[lo:lo + 16]
        ph = np.exp(-1j * t[:, None, None] * Q[None])
        v1 = spectral.coeffs_to_grid(c1[None] * ph, ks, P)
        v2 = spectral.coeffs_to_grid(c2[None] * ph, ks, P)
        amp = np.abs(g1(t) * g2(t)) ** 2
        per.append(amp * TWO_PI ** 2 * np.mean(np.abs(v1 * v2) ** 2, axis=(1, 2)))
    return _refined(np.concatenate(per), n, 2)


def _dressing(rng, strength):
    eps = rng.uniform(0, strength)
    sig = rng.uniform(-8, 8)
    return lambda t: 1.0 + eps * np.exp(1j * sig * np.asarray(t, dtype=float))


def localized_product_ratio(u1, u2, b_prime, n_t=MIN_SAMPLES, n_time_samples=64, g1=None, g2=None):
    """||u1 u2||_{L^2_t L^2_x} / (||u1||_{X^{0,b'}} ||u2||_{X^{0,b'}}) for dressed free flows."""
    one = lambda t: np.ones_like(np.asarray(t, dtype=float), dtype=complex)  # noqa: E731
    g1, g2 = g1 or one, g2 or one
    R = max(u1.support_radius, u2.support_radius)
    keep = np.abs(u1.grid.k) <= R
    ks = u1.grid.k[keep]
    c1 = u1.coeffs[np.ix_(keep, keep)]
    c2 = u2.coeffs[np.ix_(keep, keep)]
    Q = u1.grid.Q[np.ix_(keep, keep)]
    P = _collocation_size(2 * (u1.support_radius + u2.support_radius))
    num, delta = _product_l2(c1, c2, ks, Q, g1, g2, n_time_samples, P)
    x1 = xsb_norm(lift_free(u1, n_t, g1), 0.0, b_prime)
    x2 = xsb_norm(lift_free(u2, n_t, g2), 0.0, b_prime)
    return num / (x1 * x2), delta


def localized_product_check(N1, N2, b_prime=0.45, ensemble=16, seed=0, geometry=None,
                            n_t=MIN_SAMPLES, n_time_samples=64, dressing=0.3):
    """Ensemble maximum of the localized product ratio at one (N1, N2).

    Data are unimodular random phases on the shells N_i <= sqrt(Q) < 2 N_i
    (N1 = 0 means the zero mode), flowed freely and multiplied by a random
    modulation g(t) = 1 + eps e^{i sigma t}.
    """
    if N1 > N2:
        raise ValueError("need N1 <= N2")
    grid = shell_grid(max(N2, 1), geometry)
    ratios, deltas = [], []
    for i in range(ensemble):
        rng = stream(seed, N1, N2, i)
        u1 = (Field.mode(grid, (0, 0)) if N1 == 0
              else spectral.random_phase_field(grid, N1, rng, "shell"))
        u2 = spectral.random_phase_field(grid, N2, rng, "shell")
        g1, g2 = _dressing(rng, dressing), _dressing(rng, dressing)
        r, d = localized_product_ratio(u1, u2, b_prime, n_t, n_time_samples, g1, g2)
        ratios.append(r)
        deltas.append(d)
    i = int(np.argmax(ratios))
    d = float(np.max(deltas))
    return ProductRecord(N1, N2, float(ratios[i]), i, d, d > REFINEMENT_TOL)


def product_sweep(N1_list=(2, 4, 8, 16), factor=4, b_prime=0.45, ensemble=16, seed=0,
                  spread_factors=(), geometry=None, n_t=MIN_SAMPLES, n_time_samples=64,
                  ratio_fn=None):
    """N1-exponent at fixed N2/N1 = factor, plus N2-spread per N1 over spread_factors.

    ``ratio_fn(N1, N2) -> ratio`` replaces the measurement (fit checks).
    """
    def measure(N1, N2):
        if ratio_fn is not None:
            return ProductRecord(N1, N2, float(ratio_fn(N1, N2)), 0, 0.0)
        return localized_product_check(N1, N2, b_prime, ensemble, seed, geometry, n_t, n_time_samples)

    records = [measure(N1, factor * N1) for N1 in N1_list]
    fit = loglog_fit([r.N1 for r in records], [r.max_ratio for r in records])
    spread = {}
    for N1 in N1_list if spread_factors else ():
        vals = [r.max_ratio for r in records if r.N1 == N1]
        for f in spread_factors:
            if f != factor:
                rec = measure(N1, f * N1)
                records.append(rec)
                vals.append(rec.max_ratio)
        spread[N1] = max(vals) / min(vals)
    return ProductSweep(records, fit.slope, fit.intercept, spread, b_prime)
