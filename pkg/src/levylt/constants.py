"""The constants c_{psi,0}, c_{psi,1}, exact means, and the integral identities
they satisfy, each checked by two independent numerical routes."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .density import delta2_density, p_max
from .exponent import DomainError, LevyExponent, psi, psi_inverse
from .quadrature import (
    DEFAULT,
    SIN2_HARMONICS,
    SIN4_HARMONICS,
    QuadratureConfig,
    QuadratureError,
    graded_edges,
    panel_integrate,
    sin2_half,
    sin4_half,
    trig_weighted_integral,
)


def _require_beta(exp):
    if not exp.beta > 1.0:
        raise DomainError(f"beta: integrals diverge for beta <= 1 (got {exp.beta})")


def _checked(val, err, tol, what):
    if not math.isfinite(val) or err > tol:
        raise QuadratureError(what, val, err)
    return val


def c_psi0(exp: LevyExponent, cfg: QuadratureConfig = DEFAULT, scheme: str = "quadpack") -> float:
    """(2/pi) int_0^inf sin^2(p/2) / psi(p) dp."""
    _require_beta(exp)
    v, e = trig_weighted_integral(lambda p: 1.0 / psi(exp, p), sin2_half, SIN2_HARMONICS, cfg, scheme)
    return _checked(2.0 / math.pi * v, 2.0 / math.pi * e, 1e-9, "c_psi0")


def c_psi1(exp: LevyExponent, cfg: QuadratureConfig = DEFAULT, scheme: str = "quadpack") -> float:
    """(16/pi) int_0^inf sin^4(p/2) / psi(p)^2 dp."""
    _require_beta(exp)
    v, e = trig_weighted_integral(lambda p: psi(exp, p) ** -2.0, sin4_half, SIN4_HARMONICS, cfg, scheme)
    return _checked(16.0 / math.pi * v, 16.0 / math.pi * e, 1e-9, "c_psi1")


def identity_213(exp: LevyExponent, cfg: QuadratureConfig = DEFAULT):
    """int_0^inf (p_s(1) - p_s(0)) ds against -c_{psi,0}.

    The s-integral is done first, in closed form, leaving
    (1/pi) int (cos p - 1)/psi dp, which is evaluated on the panel scheme;
    c_{psi,0} comes from QUADPACK. Returns (value, |value + c0|).
    """
    v, _ = trig_weighted_integral(lambda p: 1.0 / psi(exp, p), lambda p: -2.0 * sin2_half(p),
                                  tuple(-2.0 * a for a in SIN2_HARMONICS), cfg, "panel")
    value = v / math.pi
    return value, abs(value + c_psi0(exp, cfg, "quadpack"))


def parseval_rhs(exp: LevyExponent, r: float, r_prime: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """(16/pi) int_0^inf sin^4(p/2) e^{-(r+r') psi(p)} dp."""
    s = r + r_prime
    pm = p_max(exp, s, cfg)
    edges = graded_edges(pm, cfg.grade_levels, math.pi / 2)
    v, _ = panel_integrate(lambda p: sin4_half(p) * np.exp(-s * psi(exp, p)), edges, cfg.gl_order)
    return 16.0 / math.pi * v


def _spatial_grid(exp, r_min, cfg, tol):
    # trapezoid is spectrally accurate once 2*pi/dx clears the product's bandwidth
    dx = math.pi / (2.0 * p_max(exp, r_min, cfg))
    x_max = 8.0 * max(1.0, 1.0 / float(psi_inverse(exp, 1.0 / r_min)))
    return dx, x_max


def parseval_pair(exp: LevyExponent, r: float, r_prime: float, cfg: QuadratureConfig = DEFAULT,
                  tol: float = 1e-7):
    """Space side (trapezoid of products of second differences) and frequency side.

    The spatial cut-off is doubled until the power-law extrapolated tail of the
    product is below ``tol``.
    """
    if not (r > 0 and r_prime > 0):
        raise ValueError("r, r_prime: must be positive")
    dx, x_max = _spatial_grid(exp, min(r, r_prime), cfg, tol)
    for _ in range(12):
        xs = np.arange(0.0, x_max + dx / 2, dx)
        a = delta2_density(exp, r, xs, 1.0, cfg)
        b = a if r_prime == r else delta2_density(exp, r_prime, xs, 1.0, cfg)
        prod = a * b
        # even integrand: 2 * int_0^X
        lhs = 2.0 * dx * (prod.sum() - 0.5 * prod[0] - 0.5 * prod[-1])
        k = len(xs) // 2
        f1, f2 = abs(prod[k]), abs(prod[-1])
        if f2 == 0.0:
            tail = 0.0
        else:
            power = math.log(f1 / f2) / math.log(xs[-1] / xs[k]) if f1 > 0 else 0.0
            tail = 2.0 * f2 * xs[-1] / (power - 1.0) if power > 1.0 else math.inf
        if tail < tol:
            return lhs, parseval_rhs(exp, r, r_prime, cfg)
        x_max *= 2.0
    raise QuadratureError("parseval_pair: spatial truncation insufficient", lhs, tail)


def rst28(exp: LevyExponent, t: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """(16/pi) int sin^4(p/2) (1 - e^{-t psi})^2 / psi^2 dp."""
    def f(p):
        ps = psi(exp, p)
        return np.expm1(-t * ps) ** 2 / ps**2

    v, e = trig_weighted_integral(f, sin4_half, SIN4_HARMONICS, cfg, "quadpack",
                                  hints=(float(psi_inverse(exp, 1.0 / t)),))
    return 16.0 / math.pi * v


def h32_residual(exp: LevyExponent, t: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """c_{psi,1} - int (int_0^t Delta Delta p_s ds)^2 dx, computed directly as

    (16/pi) int sin^4(p/2) e^{-t psi}(2 - e^{-t psi}) / psi^2 dp  (>= 0).
    """
    if not t > 0:
        raise ValueError(f"t: must be positive, got {t}")
    pm = p_max(exp, t, cfg)
    edges = graded_edges(pm, cfg.grade_levels + 16, math.pi / 2)

    def f(p):
        ps = psi(exp, p)
        e = np.exp(-t * ps)
        return sin4_half(p) * e * (2.0 - e) / ps**2

    v, _ = panel_integrate(f, edges, cfg.gl_order)
    return 16.0 / math.pi * v


def mean_correction(exp: LevyExponent, t: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """4 c0 t - E int (L^{x+1}_t - L^x_t)^2 dx = (8/pi) int sin^2(p/2)(1-e^{-t psi})/psi^2 dp."""
    def f(p):
        ps = psi(exp, p)
        return -np.expm1(-t * ps) / ps**2

    v, _ = trig_weighted_integral(f, sin2_half, SIN2_HARMONICS, cfg, "quadpack",
                                  hints=(float(psi_inverse(exp, 1.0 / t)),))
    return 8.0 / math.pi * v


def exact_mean(exp: LevyExponent, t: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """E int (L^{x+1}_t - L^x_t)^2 dx = 4 int_0^t (t-r)(p_r(0) - p_r(1)) dr."""
    if t < 0:
        raise ValueError(f"t: must be non-negative, got {t}")
    if t == 0:
        return 0.0
    return 4.0 * c_psi0(exp, cfg) * t - mean_correction(exp, t, cfg)


def exact_alpha_mean(exp: LevyExponent, t: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """E int (L^x_t)^2 dx = (2/pi) int_0^inf [t/psi - (1 - e^{-t psi})/psi^2] dp."""
    knee = float(psi_inverse(exp, 1.0 / t))

    def f(p):
        ps = psi(exp, p)
        x = t * ps
        # t/psi - (1-e^{-x})/psi^2 = t^2 (x - 1 + e^{-x}) / x^2
        small = x < 1e-4
        g = np.where(small, 0.5 - x / 6.0 + x * x / 24.0, (x + np.expm1(-x)) / np.where(small, 1.0, x) ** 2)
        return t * t * g

    edges = graded_edges(knee * 64.0, cfg.grade_levels)
    head, _ = panel_integrate(f, edges, cfg.gl_order)
    # beyond the knee the integrand is t/psi - 1/psi^2 up to e^{-64^beta}
    edges = np.geomspace(knee * 64.0, knee * 64.0 * 1e12, 241)
    mid, _ = panel_integrate(f, edges, cfg.gl_order)
    far = knee * 64.0 * 1e12
    power = math.log(psi(exp, 2.0 * far) / psi(exp, far)) / math.log(2.0)
    tail = t * far / (psi(exp, far) * (power - 1.0))
    return 2.0 / math.pi * (head + mid + tail)


def _geometric_weight_sum(x, n: int):
    """S(x) = sum_{l=1}^{n-1} (n - l) e^{-l x}, stable for small n x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = n * x < 1e-3
    if np.any(small):
        l = np.arange(1, n, dtype=float)
        w = n - l
        a = [float(np.sum(w * l**k)) for k in range(4)]
        xs = x[small]
        out[small] = a[0] - a[1] * xs + a[2] * xs**2 / 2.0 - a[3] * xs**3 / 6.0
    big = ~small
    if np.any(big):
        xb = x[big]
        one_minus_q = -np.expm1(-xb)
        one_minus_qn = -np.expm1(-n * xb)
        out[big] = np.exp(-xb) * (n * one_minus_q - one_minus_qn) / one_minus_q**2
    return out


def _estimator_integral(exp, t, dt, h, weight, cfg):
    n = int(round(t / dt))
    pm = min(float(psi_inverse(exp, cfg.decay_cutoff / dt)), cfg.p_truncation)
    # sinc^2 zeros are 2pi/h apart and h <= 1, so pi/4 panels resolve both factors
    edges = graded_edges(pm, cfg.grade_levels, math.pi / 4)

    def f(p):
        return weight(p) * np.sinc(p * h / (2.0 * math.pi)) ** 2 * _geometric_weight_sum(dt * psi(exp, p), n)

    v, _ = panel_integrate(f, edges, cfg.gl_order)
    return n, v


def estimator_mean(exp: LevyExponent, t: float, dt: float, h: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """Exact mean of the box-kernel estimate of int (L^{x+1} - L^x)^2 dx.

    The estimate counts skeleton positions X_{k dt}, k = 1..n, in bins of width
    h whose origin is uniformly randomised; then

        E = 2 t dt/h + (8 dt^2/pi) int sin^2(p/2) sinc^2(ph/2) S(dt psi(p)) dp

    with S as in ``_geometric_weight_sum``. As dt, h -> 0 this tends to
    ``exact_mean``.
    """
    _, v = _estimator_integral(exp, t, dt, h, sin2_half, cfg)
    return 2.0 * t * dt / h + 8.0 * dt * dt / math.pi * v


def estimator_alpha_mean(exp: LevyExponent, t: float, dt: float, h: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """Exact mean of the box-kernel estimate of int (L^x)^2 dx (same conventions)."""
    _, v = _estimator_integral(exp, t, dt, h, lambda p: np.ones_like(p), cfg)
    return t * dt / h + 2.0 * dt * dt / math.pi * v


@dataclass
class ConstantsReport:
    family: dict
    c_psi_0: float
    c_psi_1: float
    identity_213_value: float
    identity_213_residual: float
    parseval_residuals: list[float] = field(default_factory=list)
    h32_residuals: list[tuple[float, float]] = field(default_factory=list)
    exact_means: list[tuple[float, float]] = field(default_factory=list)
    mean_slope: float = float("nan")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def constants_report(exp: LevyExponent, t_list=(1e2, 1e3, 1e4), cfg: QuadratureConfig = DEFAULT,
                     radii=(0.5, 1.0, 2.0)) -> ConstantsReport:
    c0 = c_psi0(exp, cfg)
    c1 = c_psi1(exp, cfg)
    val, res = identity_213(exp, cfg)
    pars = []
    for r in radii:
        for rp in radii:
            lhs, rhs = parseval_pair(exp, r, rp, cfg)
            pars.append(abs(lhs - rhs))
    t_list = [float(t) for t in t_list]
    h32 = [(t, h32_residual(exp, t, cfg)) for t in t_list]
    means = [(t, exact_mean(exp, t, cfg)) for t in t_list]
    slope = float("nan")
    if len(means) >= 2:
        lt = np.log([t for t, _ in means])
        lm = np.log([m for _, m in means])
        slope = float(np.polyfit(lt, lm, 1)[0])
    return ConstantsReport(exp.to_dict(), c0, c1, val, res, pars, h32, means, slope)


def loglog_slope(ts, values) -> float:
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])
