"""Potential functions (radial profiles and general 1D potentials).

A :class:`PotentialSpec` bundles a profile with its dimension and the
*declared* almost-everywhere Hessian eigenvalue bounds. The bounds are
inputs, not computed quantities: quadratic profiles get them exactly,
every other profile relies on the caller (a grid spot-check flags
violations as warnings, it cannot certify them off-grid).
"""

from __future__ import annotations

import csv
import math
import warnings
import weakref
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

from .errors import DivergentIntegral, DomainError
from .extparam import ExtParam, theta_value_array

# Truncation-search policy: an integrand counts as decayed once it falls
# below _DECAY_FLOOR times its peak; no decay by _RADIUS_CAP is divergence.
_DECAY_FLOOR = 1e-16
_RADIUS_CAP = 1e10


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Quadratic:
    """U(x) = a |x|^2 with a > 0."""

    a: float

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError("quadratic coefficient must be a positive real")

    def value(self, r):
        return self.a * np.square(r)

    def deriv(self, r):
        return 2.0 * self.a * np.asarray(r, dtype=float)

    def second(self, r):
        return np.full_like(np.asarray(r, dtype=float), 2.0 * self.a)


@dataclass(frozen=True, eq=False)
class RadialTabulated:
    """Radial profile sampled on a strictly increasing grid, PCHIP-interpolated.

    Monotone cubic interpolation avoids spurious oscillation in the
    sup/inf scans. Beyond the last node the profile continues linearly
    with the boundary slope (documented extrapolation, flagged to the
    structural scans through the expanding-window convergence test).
    """

    r_nodes: np.ndarray
    u_values: np.ndarray
    u_interp: PchipInterpolator = field(repr=False)
    du_interp: Callable = field(repr=False)

    @classmethod
    def from_samples(cls, r, u, du=None) -> "RadialTabulated":
        r = np.asarray(r, dtype=float)
        u = np.asarray(u, dtype=float)
        if r.ndim != 1 or r.size < 4:
            raise ValueError("tabulated profile needs at least 4 radial nodes")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radial nodes must be strictly increasing")
        if not np.isfinite(u[0]):
            raise ValueError("u(0) must be finite")
        u_interp = PchipInterpolator(r, u, extrapolate=False)
        if du is not None:
            du_interp = PchipInterpolator(r, np.asarray(du, dtype=float), extrapolate=False)
        else:
            du_interp = u_interp.derivative()
        return cls(r, u, u_interp, du_interp)

    def _split(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.r_nodes[0], self.r_nodes[-1]
        return r, np.clip(r, lo, hi), lo, hi

    def value(self, r):
        r, rc, lo, hi = self._split(r)
        out = np.asarray(self.u_interp(rc), dtype=float)
        # linear extension with boundary slopes
        shi = float(self.du_interp(hi))
        slo = float(self.du_interp(lo))
        out = np.where(r > hi, self.u_interp(hi) + shi * (r - hi), out)
        out = np.where(r < lo, self.u_interp(lo) + slo * (r - lo), out)
        return out if out.ndim else float(out)

    def deriv(self, r):
        r, rc, lo, hi = self._split(r)
        out = np.asarray(self.du_interp(rc), dtype=float)
        out = np.where(r > hi, self.du_interp(hi), out)
        out = np.where(r < lo, self.du_interp(lo), out)
        return out if out.ndim else float(out)

    def second(self, r, h=1e-5):
        r = np.asarray(r, dtype=float)
        step = h * np.maximum(1.0, np.abs(r))
        return (self.deriv(r + step) - self.deriv(r - step)) / (2.0 * step)


@dataclass(frozen=True, eq=False)
class OneDim:
    """General 1D potential given by callables U and U' (dimension 1 only)."""

    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]

    def value(self, x):
        return np.asarray(self.f(np.asarray(x, dtype=float)), dtype=float)

    def deriv(self, x):
        return np.asarray(self.fprime(np.asarray(x, dtype=float)), dtype=float)

    def second(self, x, h=1e-5):
        x = np.asarray(x, dtype=float)
        step = h * np.maximum(1.0, np.abs(x))
        return (self.deriv(x + step) - self.deriv(x - step)) / (2.0 * step)


# --------------------------------------------------------------------------
# the spec bundle
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A potential with its dimension and declared Hessian eigenvalue bounds.

    ``hess_upper`` / ``hess_lower`` are None when unbounded/undeclared.
    Immutable after construction; all evaluation is reentrant.
    """

    dimension: int
    profile: object
    hess_upper: Optional[float] = None
    hess_lower: Optional[float] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if isinstance(self.profile, OneDim) and self.dimension != 1:
            raise ValueError("general 1D potentials require dimension 1")

    # -- evaluation -------------------------------------------------------
    @property
    def is_radial(self) -> bool:
        return not isinstance(self.profile, OneDim)

    def value(self, x):
        """Profile value; radial profiles take a radius, 1D profiles a signed x."""
        return self.profile.value(x)

    def deriv(self, x):
        return self.profile.deriv(x)

    def grad_norm(self, x):
        return np.abs(self.profile.deriv(x))

    def second(self, x):
        return self.profile.second(x)

    # -- constructors -----------------------------------------------------
    @classmethod
    def quadratic(cls, a: float, dimension: int) -> "PotentialSpec":
        # D^2(a|x|^2) = 2a Id exactly, both bounds
        return cls(dimension, Quadratic(a), hess_upper=2.0 * a, hess_lower=2.0 * a)

    @classmethod
    def one_dim(cls, f, fprime, hess_upper=None, hess_lower=None) -> "PotentialSpec":
        return cls(1, OneDim(f, fprime), hess_upper, hess_lower)

    @classmethod
    def tabulated(cls, r, u, du=None, dimension: int = 1,
                  hess_upper=None, hess_lower=None) -> "PotentialSpec":
        spec = cls(dimension, RadialTabulated.from_samples(r, u, du),
                   hess_upper, hess_lower)
        spec._spot_check_hessian()
        return spec

    @classmethod
    def from_csv(cls, path, dimension: int = 1,
                 hess_upper=None, hess_lower=None) -> "PotentialSpec":
        """Load a tabulated radial profile from CSV: header row, columns r,u[,du]."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or any(_is_number(tok) for tok in header):
                raise ValueError(f"{path}: header row required")
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                rows.append([float(c) for c in row[: 3]])
        if not rows:
            raise ValueError(f"{path}: no data rows")
        ncols = len(rows[0])
        if ncols not in (2, 3) or any(len(r) != ncols for r in rows):
            raise ValueError(f"{path}: expected 2 or 3 columns throughout")
        data = np.asarray(rows, dtype=float)
        du = data[:, 2] if ncols == 3 else None
        return cls.tabulated(data[:, 0], data[:, 1], du,
                             dimension=dimension,
                             hess_upper=hess_upper, hess_lower=hess_lower)

    def _spot_check_hessian(self):
        """Warn when declared eigenvalue bounds fail on the sample grid."""
        prof = self.profile
        if not isinstance(prof, RadialTabulated):
            return
        grid = prof.r_nodes[1:-1]
        if grid.size == 0:
            return
        sec = prof.second(grid)
        tol = 1e-6 * max(1.0, float(np.max(np.abs(sec))))
        if self.hess_upper is not None and float(np.max(sec)) > self.hess_upper + tol:
            warnings.warn("declared hess_upper violated on the sample grid", UserWarning)
        if self.hess_lower is not None and float(np.min(sec)) < self.hess_lower - tol:
            warnings.warn("declared hess_lower violated on the sample grid", UserWarning)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NormConstant:
    """Normalization constant with its quadrature error estimate."""

    z: float
    abs_error: float

    def __post_init__(self):
        if not (self.z > 0.0 and math.isfinite(self.z)):
            raise DivergentIntegral(f"normalization constant not finite/positive: {self.z}")


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n: pi^(n/2) / Gamma(n/2 + 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def log_reference_integral(n: int, p) -> float:
    """log of I_p = integral over R^n of (1 + |z|^2/p)^(-p) dz, closed form."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(p, ExtParam):
        if not p.is_finite:
            return 0.5 * n * math.log(math.pi)
        p = p.value
    if math.isinf(p):
        return 0.5 * n * math.log(math.pi)
    if p < n:
        raise DomainError(f"reference integral requires p >= n, got p={p}, n={n}")
    return 0.5 * n * (math.log(p) + math.log(math.pi)) + gammaln(p - 0.5 * n) - gammaln(p)


def reference_integral(n: int, p) -> float:
    """I_p via log-gamma; the integral converges since 2p > n."""
    return math.exp(log_reference_integral(n, p))


def _radial_weight(U: PotentialSpec, p: ExtParam, n: int):
    """Vectorized integrand r^(n-1) exp(-theta_p(U(r))) on [0, inf)."""
    def f(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        expo = theta_value_array(p, U.value(r))
        if n == 1:
            return np.exp(-expo)
        return np.where(r > 0.0, r ** (n - 1) * np.exp(-expo), 0.0)
    return f


def truncation_radius(f, start: float = 1.0) -> float:
    """Smallest doubling radius where f drops below the decay floor times its peak."""
    probe = np.concatenate(([0.0], np.logspace(-6, math.log10(max(start, 1.0)) + 1.0, 256)))
    peak = float(np.max(f(probe)))
    if peak <= 0.0 or not math.isfinite(peak):
        raise DivergentIntegral("integrand peak is zero or non-finite")
    r = max(start, 1.0)
    while float(f(np.array([r]))[0]) > _DECAY_FLOOR * peak:
        r *= 2.0
        if r > _RADIUS_CAP:
            raise DivergentIntegral(
                f"no decay below {_DECAY_FLOOR} x peak by radius {_RADIUS_CAP:g}")
    return r


def tail_quadrature(f, r: float):
    """Adaptive quadrature of a decaying integrand over [r, inf), r > 0.

    Substituting u = 1/s maps the half-line onto (0, 1/r], where adaptive
    quadrature resolves polynomial tails that defeat the default
    infinite-limit transformation at large r.
    """
    g = lambda u: float(f(np.array([1.0 / u]))[0]) / (u * u)
    val, err = quad(g, 0.0, 1.0 / r, epsabs=1e-300, epsrel=1e-12, limit=400)
    return val, err


def _quad_halfline(f, split: float):
    """Adaptive quadrature of f over [0, inf), split at a moderate radius."""
    fs = lambda r: float(f(np.array([r]))[0])
    head, e1 = quad(fs, 0.0, split, epsabs=0.0, epsrel=1e-12, limit=400)
    tail, e2 = tail_quadrature(f, split)
    return head + tail, e1 + e2


def normalization(U: PotentialSpec, p: ExtParam) -> NormConstant:
    """Total mass of exp(-theta_p(U)) over R^n by radial reduction (or full-line quadrature).

    Relative error target 1e-9, reported through ``abs_error``.
    """
    n = U.dimension
    start = math.sqrt(p.value) if p.is_finite else 1.0
    split = 10.0 * max(1.0, start)
    if U.is_radial:
        f = _radial_weight(U, p, n)
        truncation_radius(f, start)  # divergence detection only
        val, err = _quad_halfline(f, split)
        z = n * unit_ball_volume(n) * val
        return NormConstant(z, n * unit_ball_volume(n) * err)
    # general 1D: integrate both half-lines
    pos = lambda x: np.exp(-theta_value_array(p, U.value(np.atleast_1d(x))))
    neg = lambda x: np.exp(-theta_value_array(p, U.value(-np.atleast_1d(x))))
    truncation_radius(pos, start)
    truncation_radius(neg, start)
    vp, ep = _quad_halfline(pos, split)
    vn, en = _quad_halfline(neg, split)
    return NormConstant(vp + vn, ep + en)


# normalization cache: potentials are immutable, so (potential, p) keys are safe
_norm_cache: "weakref.WeakKeyDictionary[PotentialSpec, dict]" = weakref.WeakKeyDictionary()


def normalization_cached(U: PotentialSpec, p: ExtParam) -> NormConstant:
    per_pot = _norm_cache.setdefault(U, {})
    key = p.raw
    if key not in per_pot:
        per_pot[key] = normalization(U, p)
    return per_pot[key]
