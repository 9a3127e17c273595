"""Transition densities of symmetric Lévy processes by Fourier cosine inversion,
their spatial differences, and the time integrals u, v, w."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exponent import LevyExponent, psi, psi_inverse
from .quadrature import DEFAULT, QuadratureConfig, QuadratureError, quad, trig_transform


@dataclass(frozen=True)
class DensityRequest:
    exp: LevyExponent
    s: float
    x: float
    gamma: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"s: must be positive, got {self.s}")


def min_time(exp: LevyExponent, cfg: QuadratureConfig = DEFAULT) -> float:
    """Smallest s with exp(-s psi(p_truncation)) <= abs_tol."""
    return math.log(1.0 / cfg.abs_tol) / psi(exp, cfg.p_truncation)


def p_max(exp: LevyExponent, s: float, cfg: QuadratureConfig = DEFAULT) -> float:
    """Frequency beyond which exp(-s psi) is negligible."""
    if s < min_time(exp, cfg):
        raise QuadratureError(f"s={s:.3g} is below {min_time(exp, cfg):.3g}; "
                              "raise p_truncation to resolve such small times")
    return min(cfg.p_truncation, float(psi_inverse(exp, cfg.decay_cutoff / s)))


def _check(val, err, cfg, what):
    scale = np.maximum(np.abs(val), 1.0)
    bad = err > 1e3 * cfg.abs_tol + cfg.rel_tol * scale
    if np.any(bad):
        i = int(np.argmax(err - scale * cfg.rel_tol))
        raise QuadratureError(f"{what}: frequency quadrature did not converge",
                              float(np.ravel(val)[i]), float(np.ravel(err)[i]))


def _out(val, err, return_err):
    if np.ndim(val) == 0:
        val, err = float(val), float(err)
    return (val, err) if return_err else val


def _require_s(s):
    if not s > 0:
        raise ValueError(f"s: must be positive, got {s}")


def transition_density(exp: LevyExponent, s: float, x=0.0, cfg: QuadratureConfig = DEFAULT,
                       return_err: bool = False):
    """p_s(x) = (1/pi) int_0^inf cos(px) exp(-s psi(p)) dp, vectorised over x."""
    _require_s(s)
    pm = p_max(exp, s, cfg)
    val, err = trig_transform(lambda p: np.exp(-s * psi(exp, p)), x, pm, cfg)
    val, err = val / math.pi, err / math.pi
    _check(val, err, cfg, "transition_density")
    return _out(val, err, return_err)


def delta1_density(exp: LevyExponent, s: float, x=0.0, gamma: float = 1.0,
                   cfg: QuadratureConfig = DEFAULT, return_err: bool = False):
    """p_s(x+gamma) - p_s(x), as a single Fourier integral (no subtraction of densities):

    -(2/pi) int cos(px) sin^2(p gamma/2) e^{-s psi} - (1/pi) int sin(px) sin(p gamma) e^{-s psi}.
    """
    _require_s(s)
    x = np.asarray(x, dtype=float)
    if gamma == 0:
        return _out(np.zeros_like(x), np.zeros_like(x), return_err)
    pm = p_max(exp, s, cfg)
    c, ec = trig_transform(lambda p: np.sin(0.5 * p * gamma) ** 2 * np.exp(-s * psi(exp, p)),
                           x, pm, cfg, freq=abs(gamma))
    sn, es = trig_transform(lambda p: np.sin(p * gamma) * np.exp(-s * psi(exp, p)),
                            x, pm, cfg, kind="sin", freq=abs(gamma))
    val = -(2.0 * c + sn) / math.pi
    err = (2.0 * ec + es) / math.pi
    _check(val, err, cfg, "delta1_density")
    return _out(val, err, return_err)


def delta2_density(exp: LevyExponent, s: float, x=0.0, gamma: float = 1.0,
                   cfg: QuadratureConfig = DEFAULT, return_err: bool = False):
    """2 p_s(x) - p_s(x+gamma) - p_s(x-gamma) = (4/pi) int cos(px) sin^2(p gamma/2) e^{-s psi} dp."""
    _require_s(s)
    x = np.asarray(x, dtype=float)
    if gamma == 0:
        return _out(np.zeros_like(x), np.zeros_like(x), return_err)
    pm = p_max(exp, s, cfg)
    c, ec = trig_transform(lambda p: np.sin(0.5 * p * gamma) ** 2 * np.exp(-s * psi(exp, p)),
                           x, pm, cfg, freq=abs(gamma))
    val, err = 4.0 * c / math.pi, 4.0 * ec / math.pi
    _check(val, err, cfg, "delta2_density")
    return _out(val, err, return_err)


def u_integral(exp: LevyExponent, x: float, t: float, cfg: QuadratureConfig = DEFAULT,
               return_err: bool = False):
    """int_0^t p_s(x) ds = (1/pi) int_0^inf cos(px) (1 - e^{-t psi})/psi dp."""
    if not t > 0:
        raise ValueError(f"t: must be positive, got {t}")
    x = abs(float(x))

    def f(p):
        ps = psi(exp, p)
        return -math.expm1(-t * ps) / ps if ps > 0 else t

    split = float(psi_inverse(exp, cfg.decay_cutoff / t))
    knee = float(psi_inverse(exp, 1.0 / t))
    if x == 0.0:
        head, e1 = quad(f, 0.0, split, cfg, points=[knee])
        tail, e2 = quad(f, split, np.inf, cfg)
    else:
        head, e1 = quad(f, 0.0, split, cfg, weight="cos", wvar=x)
        tail, e2 = quad(lambda p: 1.0 / psi(exp, p), split, np.inf, cfg, weight="cos", wvar=x)
    val, err = (head + tail) / math.pi, (e1 + e2) / math.pi
    return (val, err) if return_err else val


def _small_time_cutoff(exp, x, gamma, t):
    """Time below which the process has not spread to the nearest relevant point,
    so the sign of the spatial difference is frozen."""
    pts = [abs(x), abs(x + gamma), abs(x - gamma), abs(gamma)]
    d = max(min(v for v in pts if v > 0), 0.05 * abs(gamma))
    return min(t * 1e-3, 1.0 / psi(exp, 20.0 / d))


def _log_simpson(values, s_nodes):
    """Composite Simpson in y = log s of f(s) * s."""
    y = np.log(s_nodes)
    g = values * s_nodes
    h = y[1] - y[0]
    return h / 3.0 * (g[0] + g[-1] + 4.0 * g[1:-1:2].sum() + 2.0 * g[2:-1:2].sum())


def _time_grid(s0, t, n):
    n = n + 1 if n % 2 == 0 else n
    return np.geomspace(s0, t, n)


def v_integral(exp: LevyExponent, x: float, t: float, gamma: float = 1.0,
               cfg: QuadratureConfig = DEFAULT) -> float:
    """int_0^t |p_s(x+gamma) - p_s(x)| ds.

    The absolute value blocks swapping the order of integration, so s is
    discretised geometrically; the initial segment [0, s0] is closed exactly
    through u, where the difference has a fixed sign.
    """
    if not t > 0:
        raise ValueError(f"t: must be positive, got {t}")
    if gamma == 0:
        return 0.0
    s0 = _small_time_cutoff(exp, x, gamma, t)
    head = abs(u_integral(exp, x + gamma, s0, cfg) - u_integral(exp, x, s0, cfg))
    nodes = _time_grid(s0, t, cfg.time_nodes)
    vals = np.array([abs(delta1_density(exp, s, x, gamma, cfg)) for s in nodes])
    return head + _log_simpson(vals, nodes)


def w_integral(exp: LevyExponent, x: float, t: float, gamma: float = 1.0,
               cfg: QuadratureConfig = DEFAULT) -> float:
    """int_0^t |2p_s(x) - p_s(x+gamma) - p_s(x-gamma)| ds."""
    if not t > 0:
        raise ValueError(f"t: must be positive, got {t}")
    if gamma == 0:
        return 0.0
    s0 = _small_time_cutoff(exp, x, gamma, t)
    head = abs(2.0 * u_integral(exp, x, s0, cfg) - u_integral(exp, x + gamma, s0, cfg)
               - u_integral(exp, x - gamma, s0, cfg))
    nodes = _time_grid(s0, t, cfg.time_nodes)
    vals = np.array([abs(delta2_density(exp, s, x, gamma, cfg)) for s in nodes])
    return head + _log_simpson(vals, nodes)


OPS = {
    "p": lambda r, cfg: transition_density(r.exp, r.s, r.x, cfg, return_err=True),
    "d1": lambda r, cfg: delta1_density(r.exp, r.s, r.x, r.gamma, cfg, return_err=True),
    "d2": lambda r, cfg: delta2_density(r.exp, r.s, r.x, r.gamma, cfg, return_err=True),
    "u": lambda r, cfg: u_integral(r.exp, r.x, r.s, cfg, return_err=True),
    "v": lambda r, cfg: (v_integral(r.exp, r.x, r.s, r.gamma, cfg), float("nan")),
    "w": lambda r, cfg: (w_integral(r.exp, r.x, r.s, r.gamma, cfg), float("nan")),
}


def evaluate(req: DensityRequest, op: str, cfg: QuadratureConfig = DEFAULT):
    """Dispatch for the CLI; for u/v/w, ``req.s`` plays the role of t."""
    try:
        fn = OPS[op]
    except KeyError:
        raise ValueError(f"op: must be one of {sorted(OPS)}, got {op!r}") from None
    return fn(req, cfg)
