"""Assembly of every theorem-level constant and the four bound regimes.

All products of many large/small factors (the K/M growth chains, the
ball-mass lower bound) are computed in log space and exponentiated once:
(5/4)^d * 10^(2d) alone overflows 64-bit floats near d ~ 150.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from .constants import aggregates, structural
from .errors import (BracketFailure, DomainError, InvalidOrder, MFrakOverflow,
                     NoConvergence, VoidBound)
from .extparam import ExtParam, _as_extparam
from .extreal import EXT_INF, EXT_ZERO, ExtReal, bound_from_terms, ext_min
from .potentials import (PotentialSpec, _radial_weight, log_reference_integral,
                         normalization_cached, tail_quadrature,
                         theta_value_array, unit_ball_volume)

_FATHI_BRACKET_CAP = 1e10
_FATHI_ABS_TOL = 1e-9


def _param_float(p) -> float:
    """Accept a finite parameter as an ExtParam or a plain number."""
    if isinstance(p, ExtParam):
        return p.value if p.is_finite else math.inf
    return float(p)


def gamma(d, D) -> ExtReal:
    """Tail-interaction exponent: +inf at D = d finite, ((2d-D)/(D-d))_+ for d < D finite, 0 at D = inf."""
    d, D = _as_extparam(d), _as_extparam(D)
    if d > D:
        raise InvalidOrder(f"requires d <= D, got d={d}, D={D}")
    if not D.is_finite:
        return EXT_ZERO
    dd, DD = d.value, D.value
    if dd == DD:
        return EXT_INF
    return ExtReal(max(0.0, (2.0 * dd - DD) / (DD - dd)))


def tail_mass(W: PotentialSpec, D: ExtParam, r: float) -> float:
    """Mass of the target density outside the ball of radius r."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0.0:
        return 1.0  # complement of the empty ball, exactly
    z = normalization_cached(W, D).z
    n = W.dimension
    start = math.sqrt(D.value) if D.is_finite else 1.0
    split = 10.0 * max(1.0, start)
    if W.is_radial:
        f = _radial_weight(W, D, n)
        num = _tail_quad(f, r, split) * n * unit_ball_volume(n)
    else:
        pos = lambda x: np.exp(-theta_value_array(D, W.value(np.atleast_1d(x))))
        neg = lambda x: np.exp(-theta_value_array(D, W.value(-np.atleast_1d(x))))
        num = _tail_quad(pos, r, split) + _tail_quad(neg, r, split)
    return num / z


def _tail_quad(f, r: float, split: float) -> float:
    if r >= split:
        val, _ = tail_quadrature(f, r)
        return val
    fs = lambda s: float(f(np.array([s]))[0])
    head, _ = quad(fs, r, split, epsabs=0.0, epsrel=1e-11, limit=400)
    tail, _ = tail_quadrature(f, split)
    return head + tail


@dataclass(frozen=True)
class GrowthData:
    """Local growth data: scale, ball-mass bound, inverted tail radius, growth factor."""

    s: float              # max{R, sqrt(d)}
    m_frak: float         # source-side ball-mass lower bound, in (0, 1]
    fathi_radius: float   # 3 * inf{r : tail_mass <= m_frak}
    growth_factor: float  # 1 + fathi_radius^2 / D  (1 at D = inf)

    def __post_init__(self):
        if self.growth_factor < 1.0 - 1e-12:
            raise ValueError("growth factor below 1")


def growth_data(V: PotentialSpec, W: PotentialSpec, d: float, D: ExtParam,
                R: float, n: int) -> GrowthData:
    """Growth data for the localized estimate (finite source parameter only)."""
    d, D = _param_float(d), _as_extparam(D)
    if not math.isfinite(d):
        raise DomainError("growth data is defined for finite source parameter d only")
    if not (0.0 < R < math.inf):
        raise ValueError("R must be finite and positive")
    if D.is_finite and d > D.value:
        raise InvalidOrder(f"requires d <= D, got d={d}, D={D.value}")
    s = max(R, math.sqrt(d))
    c0_big = structural(V, ExtParam.finite(d), 10.0 * s).C0
    z = normalization_cached(V, ExtParam.finite(d)).z
    log_m = (math.log(unit_ball_volume(n)) + n * math.log(3.0 * s)
             - math.log(z) - d * math.log(c0_big)
             - d * math.log1p(100.0 * s * s / d))
    m_frak = math.exp(log_m)
    if m_frak > 1.0:
        warnings.warn(
            f"ball-mass lower bound exceeds 1 ({m_frak:.3g}); inputs are "
            "inconsistent with a probability density, radius set to 0",
            MFrakOverflow)
        fathi = 0.0
    else:
        fathi = 3.0 * _invert_tail_mass(W, D, m_frak)
    g = 1.0 + fathi * fathi / D.value if D.is_finite else 1.0
    return GrowthData(s=s, m_frak=m_frak, fathi_radius=fathi, growth_factor=g)


def _invert_tail_mass(W: PotentialSpec, D: ExtParam, target: float) -> float:
    """inf{r >= 0 : tail_mass(r) <= target} by doubling bracket + bisection."""
    if target >= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while tail_mass(W, D, hi) > target:
        lo = hi
        hi *= 2.0
        if hi > _FATHI_BRACKET_CAP:
            raise BracketFailure(
                f"tail-mass inversion bracket exceeded {_FATHI_BRACKET_CAP:g}")
    while hi - lo > _FATHI_ABS_TOL:
        mid = 0.5 * (lo + hi)
        if tail_mass(W, D, mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class _LocalFactors:
    lam: float
    xi: float
    growth: Optional[GrowthData]
    C0_W: float
    C1_W: float
    gamma_dD: ExtReal


def _local_factors(V: PotentialSpec, W: PotentialSpec, d: float, D: ExtParam,
                   R: float, n: int, c_W2: float) -> _LocalFactors:
    d, D = _param_float(d), _as_extparam(D)
    if not D.is_finite:
        return _LocalFactors(1.0, 0.0, None, 1.0, 0.0, EXT_ZERO)
    gd = growth_data(V, W, d, D, R, n)
    sw = structural(W, D, gd.fathi_radius)
    lam = sw.C0 * gd.growth_factor
    g = gamma(ExtParam.finite(d), D)
    xi = ext_min(ExtReal((D.value / d) * sw.C1 / sw.C0),
                 g.times(c_W2) if g.raw != 0.0 else EXT_ZERO)
    return _LocalFactors(lam, xi.value, gd, sw.C0, sw.C1, g)


def local_factors(V: PotentialSpec, W: PotentialSpec, d: float, D: ExtParam,
                  R: float, n: int) -> Tuple[float, float]:
    """(lambda, xi) of the localized estimate; requires the target's declared c(2) > 0."""
    c_W2 = _require_hess_lower(W)
    lf = _local_factors(V, W, d, D, R, n, c_W2)
    return lf.lam, lf.xi


@dataclass(frozen=True)
class BoundReport:
    """One assembled bound: regime, A/B terms, sqrt(A+B)+sqrt(B), full provenance."""

    regime: str
    A: float
    B: ExtReal
    bound: ExtReal
    constants: Dict[str, float] = field(default_factory=dict)
    scenario: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "A": self.A,
            "B": self.B.as_float(),
            "bound": self.bound.as_float(),
            "constants": dict(self.constants),
            "scenario": dict(self.scenario),
        }


def _require_hess_upper(V: PotentialSpec) -> float:
    if V.hess_upper is None or not math.isfinite(V.hess_upper):
        raise VoidBound("source potential has no finite declared Hessian upper bound")
    return float(V.hess_upper)


def _require_hess_lower(W: PotentialSpec) -> float:
    if W.hess_lower is None or W.hess_lower <= 0.0:
        raise VoidBound("target potential has no positive declared Hessian lower bound")
    return float(W.hess_lower)


def _check_order(n: int, d: ExtParam, D: ExtParam):
    if d > D:
        raise InvalidOrder(f"requires d <= D, got d={d.label()}, D={D.label()}")
    if d.is_finite and d.value < n:
        raise DomainError(f"requires n <= d, got n={n}, d={d.value}")


def _scenario_stub(V, W, n, d, D, R=None) -> dict:
    out = {"n": n, "d": d.label(), "D": D.label()}
    if R is not None:
        out["R"] = R
    return out


def local_bound(V: PotentialSpec, W: PotentialSpec, n: int,
                d: ExtParam, D: ExtParam, R: float) -> BoundReport:
    """Localized Hessian bound on the ball B_R (endpoint/Caffarelli branches included)."""
    _check_order(n, d, D)
    if not R > 0.0:
        raise ValueError("local bound needs positive R")
    if D.is_finite and not math.isfinite(R):
        raise ValueError("finite target parameter needs a finite ball radius R")
    C_V2 = _require_hess_upper(V)
    c_W2 = _require_hess_lower(W)
    scen = _scenario_stub(V, W, n, d, D, R)
    try:
        if not d.is_finite:
            # both parameters infinite: the endpoint conventions collapse the bound
            a = C_V2 / c_W2
            return BoundReport("caffarelli", a, EXT_ZERO, bound_from_terms(a, EXT_ZERO),
                               {"C_V2": C_V2, "c_W2": c_W2}, scen)
        c0 = structural(V, d, R).c0
        if not D.is_finite:
            a = C_V2 / (c_W2 * c0)
            return BoundReport("endpoint_poly_log", a, EXT_ZERO,
                               bound_from_terms(a, EXT_ZERO),
                               {"C_V2": C_V2, "c_W2": c_W2, "c0_V": c0,
                                "lambda": 1.0, "xi": 0.0}, scen)
        lf = _local_factors(V, W, d.value, D, R, n, c_W2)
        C1_V = structural(V, d, math.inf).C1
        a = C_V2 * lf.lam / (c_W2 * c0)
        b = ExtReal(4.0 * C1_V * lf.lam * lf.xi / (c_W2 * c_W2 * c0 * c0))
        consts = {
            "C_V2": C_V2, "c_W2": c_W2, "c0_V": c0, "C1_V_global": C1_V,
            "lambda": lf.lam, "xi": lf.xi, "gamma": lf.gamma_dD.as_float(),
            "C0_W_at_fathi_radius": lf.C0_W, "C1_W_at_fathi_radius": lf.C1_W,
            "s": lf.growth.s, "m_frak": lf.growth.m_frak,
            "fathi_radius": lf.growth.fathi_radius,
            "growth_factor": lf.growth.growth_factor,
        }
        return BoundReport("local", a, b, bound_from_terms(a, b), consts, scen)
    except NoConvergence as exc:
        raise VoidBound(f"local bound void: {exc}") from exc


def global_bound(V: PotentialSpec, W: PotentialSpec, n: int,
                 d: ExtParam, D: ExtParam) -> BoundReport:
    """Parameter-uniform global Hessian bound (independent of d, D; only n enters)."""
    _check_order(n, d, D)
    C_V2 = _require_hess_upper(V)
    c_W2 = _require_hess_lower(W)
    try:
        av = aggregates(V, n, "source")
        aw = aggregates(W, n, "target")
    except NoConvergence as exc:
        raise VoidBound(f"global bound void: {exc}") from exc
    m_glob = 1e6 * av.qU ** 2 * aw.qU ** 2
    a = C_V2 * aw.CU * m_glob / (c_W2 * av.cU)
    b = ExtReal(8.0 * av.LU * aw.LU * m_glob / (c_W2 * c_W2 * av.cU * av.cU))
    consts = {"C_V2": C_V2, "c_W2": c_W2, "q_V": av.qU, "q_W": aw.qU,
              "c_frak_V": av.cU, "C_frak_W": aw.CU, "L_V": av.LU, "L_W": aw.LU,
              "M_glob": m_glob}
    return BoundReport("global", a, b, bound_from_terms(a, b), consts,
                       _scenario_stub(V, W, n, d, D))


def finite_growth_constants(V: PotentialSpec, W: PotentialSpec, n: int,
                            d: float, D: float) -> Tuple[float, float]:
    """The linear-growth constants (K, M) of the finite-parameter growth estimate."""
    d, D = _param_float(d), _param_float(D)
    if not (n <= d <= D < math.inf):
        raise DomainError(f"requires n <= d <= D < inf, got n={n}, d={d}, D={D}")
    try:
        sv = structural(V, ExtParam.finite(d), math.inf)
        sw = structural(W, ExtParam.finite(D), math.inf)
    except NoConvergence as exc:
        raise VoidBound(f"growth constants void: {exc}") from exc
    log_bracket = (d * (math.log(sv.C0) - math.log(sv.c0))
                   + D * (math.log(sw.C0) - math.log(sw.c0))
                   + d * math.log(1.25) + 2.0 * d * math.log(10.0)
                   - n * math.log(3.0)
                   + D * (math.log(D) - math.log(d))
                   + log_reference_integral(n, d) - log_reference_integral(n, D))
    log_k = math.log(3.0) + log_bracket / (2.0 * D - n)
    k = math.exp(log_k)
    m = math.exp(math.log(d / D) + 2.0 * log_k)
    return k, m


def finite_global_sharp_bound(V: PotentialSpec, W: PotentialSpec, n: int,
                              d: float, D: float) -> BoundReport:
    """Sharper finite-parameter global bound built on the (K, M) growth chain."""
    d, D = _param_float(d), _param_float(D)
    C_V2 = _require_hess_upper(V)
    c_W2 = _require_hess_lower(W)
    k, m = finite_growth_constants(V, W, n, d, D)
    try:
        sv = structural(V, ExtParam.finite(d), math.inf)
        sw = structural(W, ExtParam.finite(D), math.inf)
    except NoConvergence as exc:
        raise VoidBound(f"sharp global bound void: {exc}") from exc
    g = gamma(ExtParam.finite(d), ExtParam.finite(D))
    one_m = 1.0 + m
    a = C_V2 * sw.C0 * one_m / (c_W2 * sv.c0)
    first = ExtReal(sw.C1 * (D / d) * one_m)
    second = g.times(c_W2 * sw.C0 * one_m) if g.raw != 0.0 else EXT_ZERO
    pref = 4.0 * sv.C1 / (c_W2 * c_W2 * sv.c0 * sv.c0)
    chosen = ext_min(first, second)
    b = ExtReal(pref * chosen.value) if chosen.is_finite else EXT_INF
    consts = {"C_V2": C_V2, "c_W2": c_W2, "K": k, "M": m,
              "c0_V": sv.c0, "C0_V": sv.C0, "C1_V": sv.C1,
              "c0_W": sw.c0, "C0_W": sw.C0, "C1_W": sw.C1,
              "gamma": g.as_float()}
    return BoundReport("finite_global_sharp", a, b, bound_from_terms(a, b), consts,
                       _scenario_stub(V, W, n, ExtParam.finite(d), ExtParam.finite(D)))


@dataclass(frozen=True)
class UniformityReport:
    """Per-triple proof-chain verification of the uniform 1 + M <= M_glob bound."""

    rows: list
    e2_product: float          # 125000 * e^2, must be < 924000
    tau_endpoint_value: float  # max over tau of the bracket logarithm
    tau_endpoint_target: float  # log 15625
    max_one_plus_m: float
    all_pass: bool


def mglob_uniformity_check(n_range, d_range, D_range, qV: float = 1.0,
                           qW: float = 1.0, V: Optional[PotentialSpec] = None,
                           W: Optional[PotentialSpec] = None) -> UniformityReport:
    """Verify every step of the chain 1 + M <= 10^6 qV^2 qW^2 on a parameter grid."""
    e2 = 125000.0 * math.exp(2.0)
    taus = np.linspace(1e-6, 1.0, 2001)
    tau_vals = math.log(9.0) + (2.0 * math.log(125.0) - 2.0 * taus * math.log(3.0)) / (2.0 - taus)
    tau_max = float(np.max(tau_vals))
    tau_target = math.log(15625.0)

    rows = []
    max_one_m = 0.0
    tol = 1e-9
    for n in n_range:
        Vn = V if V is not None else PotentialSpec.quadratic(1.0, n)
        Wn = W if W is not None else PotentialSpec.quadratic(1.0, n)
        for d in d_range:
            if d < n:
                continue
            sv = structural(Vn, ExtParam.finite(float(d)), math.inf)
            ratio_v = sv.C0 / sv.c0
            for D in D_range:
                if D < d:
                    continue
                sw = structural(Wn, ExtParam.finite(float(D)), math.inf)
                ratio_w = sw.C0 / sw.c0
                expo = 2.0 / (2.0 * D - n)
                s1 = (ratio_v ** (d * expo) <= qV * qV + tol
                      and ratio_w ** (D * expo) <= qW * qW + tol)
                s2 = (d / D) * (D / d) ** (D * expo) <= 2.0 + tol
                mid = 9.0 * math.exp(expo * (d * math.log(1.25)
                                             + 2.0 * d * math.log(10.0)
                                             - n * math.log(3.0)))
                upper = 9.0 * math.exp(expo * (D * math.log(125.0) - n * math.log(3.0)))
                s3 = mid <= upper * (1.0 + tol) and upper <= 15625.0 * (1.0 + tol)
                s4 = math.exp(expo * (log_reference_integral(n, float(d))
                                      - log_reference_integral(n, float(D)))) \
                    <= 4.0 * math.exp(2.0) + tol
                _, m = finite_growth_constants(Vn, Wn, n, float(d), float(D))
                s5 = 1.0 + m <= 1e6 * qV * qV * qW * qW + tol
                max_one_m = max(max_one_m, 1.0 + m)
                rows.append({"n": n, "d": d, "D": D, "one_plus_M": 1.0 + m,
                             "ratio_exponent": s1, "dD_factor": s2,
                             "polynomial_factor": s3, "reference_ratio": s4,
                             "uniform_bound": s5,
                             "pass": s1 and s2 and s3 and s4 and s5})
    all_pass = (e2 < 924000.0
                and abs(tau_max - tau_target) < 1e-6
                and all(r["pass"] for r in rows))
    return UniformityReport(rows, e2, tau_max, tau_target, max_one_m, all_pass)
