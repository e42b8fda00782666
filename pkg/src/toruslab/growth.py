"""Long-time Sobolev norm tracking and the increment-to-polynomial-bound oracle.

The growth bound being tested is ||u(t)||_{H^s} <= C <t>^{(s-1)/(1-s0)}
for defocusing data, with s0 = 131/416. It is checked as non-violation: the
fitted exponent may be far below the bound.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, nls, spectral
from ._util import loglog_fit, write_csv
from .estimates import S0

GROWTH_SLACK = 0.05
MASS_TOL = 1e-10
ENERGY_TOL = 1e-4
EDGE_TOL = 1e-10


@dataclass
class GrowthSeries:
    times: np.ndarray
    hs_values: np.ndarray
    s: float
    theta: tuple = (1.0, math.sqrt(2.0))
    params: dict = field(default_factory=dict)
    h1_initial: float = float("nan")
    audits: dict = field(default_factory=dict)

    def to_csv(self, path):
        write_csv(path, ["t", "hs"], zip(self.times.tolist(), self.hs_values.tolist()))

    @classmethod
    def from_csv(cls, path, s):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], float(s))


def growth_bound(s):
    """(s - 1) / (1 - s0); 416/285 for s = 2."""
    return (float(s) - 1.0) / (1.0 - float(S0))


def _edge_fraction(u):
    """Share of the L^2 mass in the outer third of the computational grid."""
    g = u.grid
    k = g.M // 2
    outer = (np.abs(g.m1) > 2 * k // 3) | (np.abs(g.m2) > 2 * k // 3)
    tot = np.sum(np.abs(u.coeffs) ** 2)
    return float(np.sum(np.abs(u.coeffs[outer]) ** 2) / tot) if tot > 0 else 0.0


def track_growth(u0, s, T, params=None, sample_every=100):
    """Evolve u0 to time T and record the eigen H^s norm every sample_every steps."""
    params = params or nls.NLSParams()
    if s < 1:
        raise ValueError("s must be >= 1")
    spec = nls.ObservableSpec(every=int(sample_every), sobolev_s=(float(s),), convention="eigen")
    traj = nls.evolve(u0, T, params, record=spec)
    hs = traj.column(nls.hs_column(float(s)))
    audits = {
        "mass_drift": traj.mass_drift(),
        "energy_drift": traj.energy_drift(),
        "edge_fraction": _edge_fraction(traj.final),
        "halted": traj.halted,
        "halt_reason": traj.halt_reason,
    }
    audits["passed"] = bool(
        not traj.halted
        and audits["mass_drift"] <= MASS_TOL
        and audits["energy_drift"] <= ENERGY_TOL
        and audits["edge_fraction"] <= EDGE_TOL
    )
    return GrowthSeries(
        times=np.asarray(traj.times),
        hs_values=np.asarray(hs),
        s=float(s),
        theta=(u0.grid.geometry.theta1, u0.grid.geometry.theta2),
        params={"alpha": params.alpha, "dt": params.dt, "dealias_oversample": params.dealias_oversample,
                "T": T, "sample_every": sample_every},
        h1_initial=spectral.sobolev_norm(u0, 1.0, "eigen"),
        audits=audits,
    )


def fit_growth_exponent(series):
    """Slope of log hs against log(1 + t) on the second half of the series."""
    t = np.asarray(series.times, dtype=float)
    y = np.asarray(series.hs_values, dtype=float)
    if t.size < 10:
        raise ValueError("need at least 10 samples")
    if np.any(y <= 0):
        raise ValueError("H^s values must be positive")
    half = slice(t.size // 2, None)
    fit = loglog_fit(1.0 + t[half], y[half])
    bound = growth_bound(series.s)
    return {
        "exponent": fit.slope,
        "bound": bound,
        "violated": bool(fit.slope > bound + GROWTH_SLACK),
    }


def default_window(series):
    """Steps spanning min(0.1, 1/||u0||_{H^1}^2), at least one."""
    h1 = series.h1_initial
    delta = 0.1 if not (h1 > 0) else min(0.1, 1.0 / h1 ** 2)
    dt = float(series.times[1] - series.times[0]) if len(series.times) > 1 else delta
    return max(1, int(round(delta / dt)))


def increment_check(series, window_steps=None, r=None):
    """Smallest C with x(t0 + d)^2 <= x(t0)^2 + C x(t0)^(2 - r) over every window.

    Also reports the unsquared variant x(t0 + d) <= x(t0) + C x(t0)^(1 - r)
    and per-window slack C_min x^(2 - r) - increment (zero at the binding window).
    """
    if window_steps is None:
        window_steps = default_window(series)
    if window_steps < 1:
        raise ValueError("window_steps must be >= 1")
    if r is None:
        r = 1.0 / growth_bound(series.s)
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    x = np.asarray(series.hs_values, dtype=float)
    w = int(window_steps)
    if x.size <= w:
        return {"C_min": 0.0, "C_min_unsquared": 0.0, "argmax_window": None, "slack": [],
                "r": r, "window_steps": w}
    a, b = x[:-w], x[w:]

    def required(inc, base):
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(inc > 0, inc / base, 0.0)
        return np.where((inc > 0) & (base == 0), np.inf, c)

    sq = required(b ** 2 - a ** 2, a ** (2 - r))
    un = required(b - a, a ** (1 - r))
    c_min = float(np.max(sq))
    slack = c_min * a ** (2 - r) - (b ** 2 - a ** 2)
    return {
        "C_min": c_min,
        "C_min_unsquared": float(np.max(un)),
        "argmax_window": int(np.argmax(sq)),
        "slack": slack.tolist(),
        "r": r,
        "window_steps": w,
    }


@dataclass(frozen=True)
class RecurrenceParams:
    r: float
    C: float
    delta: float = 1.0
    y0: float = 1.0

    def __post_init__(self):
        if not 0 < self.r <= 1:
            raise ValueError("r must lie in (0, 1]")
        if self.C < 0:
            raise ValueError("C must be >= 0")
        if not self.delta > 0 or not self.y0 > 0:
            raise ValueError("delta and y0 must be positive")


STABILITY_TOL = 0.01


def recurrence_bound_check(p, K=100_000):
    """Iterate y_{k+1} = y_k + C y_k^{(2-r)/2} and test x_k / (1 + k delta)^{1/r} stays bounded.

    ``holds`` when the running maximum of the ratio grows by under 1% across
    the last decade of k.
    """
    K = int(K)
    if K < 10:
        raise ValueError("K must be >= 10")
    y, reached = kernels.recurrence_iterate(p.y0, p.C, p.r, K)
    k = np.arange(y.size)
    ratio = np.sqrt(y) / (1.0 + k * p.delta) ** (1.0 / p.r)
    run = np.maximum.accumulate(ratio)
    start = run[min(y.size - 1, max(0, (y.size - 1) // 10))]
    increase = float(run[-1] / start - 1.0) if start > 0 else 0.0
    overflow = reached < K
    return {
        "C_prime": float(run[-1]),
        "max_ratio_index": int(np.argmax(ratio)),
        "last_decade_increase": increase,
        "holds": bool(not overflow and increase < STABILITY_TOL),
        "k_reached": int(reached),
        "overflow": bool(overflow),
        "x_final": float(np.sqrt(y[-1])),
    }
