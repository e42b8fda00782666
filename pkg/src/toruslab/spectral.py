"""Fourier fields on the rescaled torus [0, 2pi)^2.

A field is stored by its coefficients in u(x) = sum_m u_hat(m) exp(i m.x),
with no 1/(2pi)^2 factor, so ||u||_{L^2}^2 = (2pi)^2 sum |u_hat|^2. The
Laplacian has symbol -Q(m) with Q(m) = (theta1 m1)^2 + (theta2 m2)^2, and the
free propagator multiplies u_hat(m) by exp(-i t Q(m)).

Coefficient arrays use numpy FFT ordering along both axes, so index i holds
frequency ``fftfreq(M, 1/M)[i]``; this is a bijection with {-M/2,...,M/2-1}.
"""

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .quadform import QuadForm, eval_form

TWO_PI = 2.0 * math.pi


class AliasingError(ValueError):
    """A field's bandwidth does not fit the requested collocation grid."""


@dataclass(frozen=True)
class TorusGeometry:
    theta1: float = 1.0
    theta2: float = math.sqrt(2.0)

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 > 0):
            raise ValueError("torus scales must be positive")

    @cached_property
    def form(self):
        return QuadForm.torus(float(self.theta1), float(self.theta2))


@dataclass(frozen=True)
class FourierGrid:
    geometry: TorusGeometry
    M: int

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be a positive even integer, got {self.M}")

    @cached_property
    def k(self):
        return np.fft.fftfreq(self.M, 1.0 / self.M).round().astype(np.int64)

    @cached_property
    def m1(self):
        return np.broadcast_to(self.k[:, None], (self.M, self.M))

    @cached_property
    def m2(self):
        return np.broadcast_to(self.k[None, :], (self.M, self.M))

    @cached_property
    def Q(self):
        return symbol(self.geometry, (self.m1, self.m2))

    @cached_property
    def abs_m(self):
        return np.hypot(self.m1, self.m2)

    @property
    def shape(self):
        return (self.M, self.M)

    def index(self, m):
        """Array index of frequency m = (m1, m2)."""
        h = self.M // 2
        if not all(-h <= mi < h for mi in m):
            raise IndexError(f"frequency {m} outside grid of size {self.M}")
        return (int(m[0]) % self.M, int(m[1]) % self.M)


@dataclass(frozen=True, eq=False)
class Field:
    grid: FourierGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    def with_coeffs(self, coeffs):
        return Field(self.grid, coeffs)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def conj(self):
        """Coefficients of the complex conjugate field (m -> -m)."""
        M = self.grid.M
        c = np.conj(self.coeffs)
        # conj(u)^(m) = conj(u^(-m)); -(-M/2) leaves the grid
        if np.any(c[M // 2, :] != 0) or np.any(c[:, M // 2] != 0):
            raise AliasingError("conjugation moves the -M/2 mode off the grid")
        idx = (-np.arange(M)) % M
        return self.with_coeffs(c[np.ix_(idx, idx)])

    @property
    def support_radius(self):
        nz = self.coeffs != 0
        if not nz.any():
            return 0
        return int(max(np.abs(self.grid.m1[nz]).max(), np.abs(self.grid.m2[nz]).max()))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def mode(cls, grid, m, c=1.0):
        u = np.zeros(grid.shape, dtype=np.complex128)
        u[grid.index(m)] = c
        return cls(grid, u)


@dataclass
class EigenLevel:
    mu: float
    members: list

    @property
    def size(self):
        return len(self.members)


def symbol(geometry, m):
    """Q(m) = (theta1 m1)^2 + (theta2 m2)^2."""
    return eval_form(geometry.form, m[0], m[1])


def free_flow(u, t):
    if t == 0:
        return u.with_coeffs(u.coeffs.copy())
    return u.with_coeffs(u.coeffs * np.exp(-1j * t * u.grid.Q))


def embed(u, grid):
    """Same field on another grid (zero-padding or exact restriction)."""
    if grid.M == u.grid.M:
        return u.with_coeffs(u.coeffs.copy())
    if u.support_radius >= grid.M // 2 and grid.M < u.grid.M:
        raise AliasingError("field support does not fit the target grid")
    out = np.zeros(grid.shape, dtype=np.complex128)
    k = u.grid.k
    keep = (k >= -(grid.M // 2)) & (k < grid.M // 2)
    idx = k[keep] % grid.M
    out[np.ix_(idx, idx)] = u.coeffs[np.ix_(keep, keep)]
    return Field(grid, out)


def restrict(u, grid):
    """Drop every mode outside ``grid`` (lossy projection)."""
    k = u.grid.k
    keep = (k >= -(grid.M // 2)) & (k < grid.M // 2)
    out = np.zeros(grid.shape, dtype=np.complex128)
    idx = k[keep] % grid.M
    out[np.ix_(idx, idx)] = u.coeffs[np.ix_(keep, keep)]
    return Field(grid, out)


def _pad(coeffs, k, P):
    out = np.zeros(coeffs.shape[:-2] + (P, P), dtype=np.complex128)
    idx = k % P
    out[..., idx[:, None], idx[None, :]] = coeffs
    return out


def to_grid(u, P, workers=None):
    """Values of u on the uniform P x P collocation grid x_j = 2 pi j / P."""
    h = P // 2
    nz = u.coeffs != 0
    if nz.any():
        m1, m2 = u.grid.m1[nz], u.grid.m2[nz]
        if min(m1.min(), m2.min()) < -h or max(m1.max(), m2.max()) >= P - h:
            raise AliasingError(f"field bandwidth exceeds a {P}-point grid")
    padded = _pad(u.coeffs, u.grid.k, P)
    return sfft.ifft2(padded, norm="forward", workers=workers)


def coeffs_to_grid(coeffs, k, P, workers=None):
    """Batch version of :func:`to_grid` for stacked coefficient arrays (..., M, M)."""
    return sfft.ifft2(_pad(coeffs, k, P), norm="forward", workers=workers)


def synthesize(u, oversample=1, workers=None):
    if oversample < 1 or int(oversample) != oversample:
        raise AliasingError("oversample must be an integer >= 1")
    return to_grid(u, int(oversample) * u.grid.M, workers=workers)


def analyze(values, grid, truncate=False, tol=1e-10, workers=None):
    """Coefficients on ``grid`` of collocation values.

    With ``truncate=False`` any energy at frequencies outside the grid raises
    :class:`AliasingError`; with ``truncate=True`` it is discarded.
    """
    values = np.asarray(values)
    P = values.shape[-1]
    if P < grid.M:
        raise AliasingError(f"{P}-point samples cannot resolve an M={grid.M} grid")
    full = sfft.fft2(values, norm="forward", workers=workers)
    idx = grid.k % P
    take = full[..., idx[:, None], idx[None, :]]
    if not truncate and P > grid.M:
        total = np.sum(np.abs(full) ** 2)
        lost = total - np.sum(np.abs(take) ** 2)
        if lost > tol * tol * max(total, 1e-300):
            raise AliasingError("samples carry energy outside the target grid")
    if take.ndim == 2:
        return Field(grid, take)
    return take


def l2_norm(u):
    return TWO_PI * float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))


def bracket(x):
    """Japanese bracket <x> = (1 + x^2)^(1/2)."""
    return np.sqrt(1.0 + np.square(x))


def sobolev_weights(grid, s, convention="bracket"):
    """Squared H^s weight per mode.

    bracket: <|m1| + |m2|>^(2s); eigen: <Q(m)>^s. The eigen norm is a sum over
    eigenspaces of <mu_k>^s ||O_k u||^2, which is the same sum taken mode by
    mode because the eigenspace projections are orthogonal.
    """
    if convention == "bracket":
        return bracket(np.abs(grid.m1) + np.abs(grid.m2)) ** (2 * s)
    if convention == "eigen":
        return bracket(grid.Q) ** s
    raise ValueError(f"unknown Sobolev convention {convention!r}")


def sobolev_norm(u, s, convention="bracket"):
    w = sobolev_weights(u.grid, s, convention)
    return TWO_PI * float(np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)))


def sobolev_equivalence_constants(grid, s, radius=None):
    """Extreme ratios of eigen to bracket weights over the (truncated) lattice.

    Returns (C1, C2) with C1 ||u||_bracket <= ||u||_eigen <= C2 ||u||_bracket
    for every field supported in the scanned region.
    """
    mask = np.ones(grid.shape, bool) if radius is None else grid.abs_m <= radius
    ratio = np.sqrt(sobolev_weights(grid, s, "eigen")[mask] / sobolev_weights(grid, s, "bracket")[mask])
    return float(ratio.min()), float(ratio.max())


def eigenspace_project(u, mu, tol=0.0):
    if tol < 0:
        raise ValueError("tol must be >= 0")
    mask = np.abs(u.grid.Q - mu) <= tol
    return u.with_coeffs(np.where(mask, u.coeffs, 0))


def eigen_levels(grid, tol=1e-6, radius=None):
    """Cluster grid frequencies into eigenvalue levels of -Laplacian.

    Frequencies whose Q values chain together within ``tol`` share a level.
    """
    mask = np.ones(grid.shape, bool) if radius is None else grid.abs_m <= radius
    q = grid.Q[mask]
    m1 = grid.m1[mask]
    m2 = grid.m2[mask]
    order = np.argsort(q, kind="stable")
    q, m1, m2 = q[order], m1[order], m2[order]
    breaks = np.flatnonzero(np.diff(q) > tol) + 1
    levels = []
    for lo, hi in zip(np.r_[0, breaks], np.r_[breaks, q.size]):
        members = list(zip(m1[lo:hi].tolist(), m2[lo:hi].tolist()))
        levels.append(EigenLevel(float(q[lo:hi].mean()), members))
    return levels


def level_collisions(levels):
    """Levels that are not a single orbit {(+-m1, +-m2)}."""
    bad = []
    for lev in levels:
        orbits = {(abs(a), abs(b)) for a, b in lev.members}
        if len(orbits) > 1:
            bad.append(lev)
    return bad


def band_project(u, N, kind="ball"):
    """Ball: keep |m| <= N. Shell: keep N <= sqrt(Q(m)) < 2N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if kind == "ball":
        mask = u.grid.abs_m <= N
    elif kind == "shell":
        r = np.sqrt(u.grid.Q)
        mask = (r >= N) & (r < 2 * N)
    else:
        raise ValueError(f"unknown band kind {kind!r}")
    return u.with_coeffs(np.where(mask, u.coeffs, 0))


def region_mask(grid, N, kind="ball"):
    if kind == "ball":
        return grid.abs_m <= N
    if kind == "shell":
        r = np.sqrt(grid.Q)
        if N == 0:
            return r < 1
        return (r >= N) & (r < 2 * N)
    raise ValueError(f"unknown region kind {kind!r}")


def random_phase_field(grid, N, rng, kind="ball"):
    """Unimodular coefficients with independent uniform phases on a region."""
    mask = region_mask(grid, N, kind)
    phases = rng.uniform(0.0, TWO_PI, size=grid.shape)
    return Field(grid, np.where(mask, np.exp(1j * phases), 0))


def smooth_random_field(grid, rng, kmax=4, amplitude=1.0):
    """Gaussian coefficients with Gaussian decay, supported in |m_i| <= kmax."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    decay = np.exp(-0.5 * (grid.m1 ** 2 + grid.m2 ** 2) / max(kmax / 2.0, 1.0) ** 2)
    box = (np.abs(grid.m1) <= kmax) & (np.abs(grid.m2) <= kmax)
    u = Field(grid, np.where(box, c * decay, 0))
    return u * (amplitude / l2_norm(u))


def write_snapshot(u, stem):
    """Write ``stem.json`` (header) and ``stem.csv`` (m1, m2, re, im)."""
    g = u.grid
    header = {
        "M": g.M,
        "theta1": float(g.geometry.theta1),
        "theta2": float(g.geometry.theta2),
        "normalization": "sum-exp",
    }
    with open(f"{stem}.json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    ks = np.sort(g.k)
    with open(f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m1", "m2", "re", "im"])
        for a in ks:
            for b in ks:
                c = u.coeffs[a % g.M, b % g.M]
                w.writerow([int(a), int(b), repr(float(c.real)), repr(float(c.imag))])


def read_snapshot(stem):
    with open(f"{stem}.json") as fh:
        header = json.load(fh)
    if header.get("normalization") != "sum-exp":
        raise ValueError(f"unsupported normalization {header.get('normalization')!r}")
    grid = FourierGrid(TorusGeometry(header["theta1"], header["theta2"]), int(header["M"]))
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    with open(f"{stem}.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            coeffs[grid.index((int(row["m1"]), int(row["m2"])))] = complex(float(row["re"]), float(row["im"]))
    return Field(grid, coeffs)
