"""One-dimensional frequency-side quadrature.

Two independent schemes are kept side by side:

* ``panel``: vectorised Gauss-Legendre on panels that are graded geometrically
  towards p = 0 (where |p|^beta has a cusp) and split at the half-periods of the
  oscillating factor.  Oscillatory tails of slowly decaying integrands are
  closed with the leading asymptotic term.
* ``quadpack``: scipy's QUADPACK (QAGS on periods, QAWF for cosine tails).

Every identity check in the package compares one against the other, or a
frequency-side value against a space/time-side one.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    def __init__(self, msg, value=float("nan"), err=float("nan")):
        super().__init__(f"{msg} (partial value={value!r}, error estimate={err!r})")
        self.value = value
        self.err = err


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    p_truncation: float = 1e6
    time_nodes: int = 512
    gl_order: int = 24
    grade_levels: int = 48
    tail_periods: int = 2000

    def __post_init__(self):
        bad = [n for n in ("abs_tol", "rel_tol", "p_truncation") if not getattr(self, n) > 0]
        bad += [n for n in ("max_subdivisions", "time_nodes", "gl_order") if not getattr(self, n) >= 2]
        if bad:
            raise ValueError("invalid QuadratureConfig fields: " + ", ".join(bad))

    @property
    def decay_cutoff(self) -> float:
        """Exponent E with exp(-E) far below abs_tol."""
        return math.log(1.0 / self.abs_tol) + 8.0


DEFAULT = QuadratureConfig()


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def graded_edges(p_max: float, levels: int, width: float | None = None) -> np.ndarray:
    """Panel edges on [0, p_max]: geometric towards 0, at most ``width`` wide."""
    geo = p_max * 2.0 ** -np.arange(levels, 0, -1, dtype=float)
    edges = np.concatenate(([0.0], geo, [p_max]))
    if width is not None and width < p_max:
        n = int(math.ceil(p_max / width))
        if n > 2_000_000:
            raise QuadratureError(f"too many panels requested ({n})")
        edges = np.union1d(edges, np.linspace(0.0, p_max, n + 1))
    return np.unique(edges)


def _nodes(edges: np.ndarray, order: int):
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def panel_integrate(f: Callable, edges: np.ndarray, order: int):
    """Integral of vectorised ``f`` over the panels, with an embedded error estimate."""
    n1, w1 = _nodes(edges, order)
    lo = max(4, (2 * order) // 3)
    n2, w2 = _nodes(edges, lo)
    v1 = float(np.dot(w1, f(n1)))
    v2 = float(np.dot(w2, f(n2)))
    return v1, abs(v1 - v2)


def trig_transform(env: Callable, xs, p_max: float, cfg: QuadratureConfig = DEFAULT,
                   kind: str = "cos", freq: float = 0.0):
    """int_0^p_max env(p) cos(p x) dp (or sin) for every x in ``xs``.

    ``freq`` is the highest angular frequency already inside ``env``; panels
    are kept shorter than half a period of the combined oscillation.
    Returns (values, error_estimates) shaped like ``xs``.
    """
    xs = np.asarray(xs, dtype=float)
    flat = np.atleast_1d(xs).ravel()
    omega = (float(np.max(np.abs(flat))) if flat.size else 0.0) + freq
    width = p_max / 8 if omega == 0 else min(math.pi / omega, p_max / 8)
    edges = graded_edges(p_max, cfg.grade_levels, width)
    trig = np.cos if kind == "cos" else np.sin
    out = np.empty(flat.size)
    err = np.empty(flat.size)
    rules = []
    for order in (cfg.gl_order, max(4, (2 * cfg.gl_order) // 3)):
        nodes, weights = _nodes(edges, order)
        rules.append((nodes, weights * env(nodes)))
    chunk = max(1, int(4_000_000 // max(1, rules[0][0].size)))
    for s in range(0, flat.size, chunk):
        xc = flat[s:s + chunk]
        vals = [trig(np.outer(xc, nodes)) @ wf for nodes, wf in rules]
        out[s:s + chunk] = vals[0]
        err[s:s + chunk] = np.abs(vals[0] - vals[1])
    return out.reshape(xs.shape), err.reshape(xs.shape)


def _tail_power_integral(f: Callable, p0: float, cfg: QuadratureConfig) -> float:
    """int_{p0}^inf f for algebraically decaying f, via p = p0 * e^y."""
    f1, f2 = f(np.array([p0, 2.0 * p0]))
    a = math.log(f1 / f2) / math.log(2.0)
    if not a > 1.0:
        raise QuadratureError(f"tail at p={p0} decays too slowly (local power {a:.3g})")
    y_max = min((cfg.decay_cutoff + 10.0) / (a - 1.0), 600.0)
    edges = np.linspace(0.0, y_max, 129)

    def g(y):
        p = p0 * np.exp(y)
        return f(p) * p

    val, _ = panel_integrate(g, edges, cfg.gl_order)
    # power-law remainder beyond p0*e^y_max (only non-negligible for a near 1)
    return val + g(np.array([y_max]))[0] / (a - 1.0)


def trig_weighted_integral(
    f: Callable,
    weight: Callable,
    harmonics: Sequence[float],
    cfg: QuadratureConfig = DEFAULT,
    scheme: str = "panel",
    hints: Sequence[float] = (),
):
    """int_0^inf f(p) * weight(p) dp for a 2*pi-periodic ``weight``.

    ``weight`` is evaluated in a numerically stable form near 0;
    ``harmonics`` are its cosine coefficients (a_0, a_1, ...) used for the
    tail, where ``f`` must be smooth and monotone. Returns (value, error).
    """
    if scheme == "panel":
        return _trig_panel(f, weight, harmonics, cfg)
    if scheme == "quadpack":
        return _trig_quadpack(f, weight, harmonics, cfg, hints)
    raise ValueError(f"unknown scheme {scheme!r}")


def _trig_panel(f, weight, harmonics, cfg):
    p_tail = TWO_PI * cfg.tail_periods
    edges = graded_edges(p_tail, cfg.grade_levels, math.pi / 2)
    head, err = panel_integrate(lambda p: f(p) * weight(p), edges, cfg.gl_order)
    tail = 0.0
    if harmonics[0] != 0.0:
        tail += harmonics[0] * _tail_power_integral(f, p_tail, cfg)
    h = 1e-3 * p_tail
    fprime = (f(np.array([p_tail + h]))[0] - f(np.array([p_tail - h]))[0]) / (2 * h)
    for k, a in enumerate(harmonics[1:], start=1):
        if a:
            tail += -a * fprime / k**2
    return head + tail, err


def _quad(f, a, b, cfg, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return integrate.quad(f, a, b, epsabs=cfg.abs_tol * 1e-2, epsrel=cfg.rel_tol * 1e-2,
                                  limit=cfg.max_subdivisions, **kw)
        except integrate.IntegrationWarning:
            pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                                  limit=cfg.max_subdivisions, **kw)
    if not math.isfinite(val) or err > max(cfg.abs_tol, cfg.rel_tol * abs(val)) * 1e3:
        raise QuadratureError(f"QUADPACK failed on [{a}, {b}]", val, err)
    return val, err


def _trig_quadpack(f, weight, harmonics, cfg, hints):
    periods = 64
    p_tail = TWO_PI * periods

    def g(p):
        return float(f(np.array([p]))[0] * weight(np.array([p]))[0])

    total, err = 0.0, 0.0
    hints = sorted(h for h in hints if 0 < h < TWO_PI)
    for k in range(periods):
        a, b = TWO_PI * k, TWO_PI * (k + 1)
        kw = {"points": hints} if (k == 0 and hints) else {}
        v, e = _quad(g, a, b, cfg, **kw)
        total += v
        err += e

    def fs(p):
        return float(f(np.array([p]))[0])

    if harmonics[0] != 0.0:
        v, e = _quad(fs, p_tail, np.inf, cfg)
        total += harmonics[0] * v
        err += abs(harmonics[0]) * e
    for k, a in enumerate(harmonics[1:], start=1):
        if a:
            v, e = _quad(fs, p_tail, np.inf, cfg, weight="cos", wvar=float(k))
            total += a * v
            err += abs(a) * e
    return total, err


def quad(f: Callable, a: float, b: float, cfg: QuadratureConfig = DEFAULT, **kw):
    """Scalar QUADPACK wrapper raising QuadratureError on failure."""
    return _quad(f, a, b, cfg, **kw)


# stable forms of the periodic weights, with their cosine series
def sin2_half(p):
    return np.sin(0.5 * p) ** 2


def sin4_half(p):
    return np.sin(0.5 * p) ** 4


SIN2_HARMONICS = (0.5, -0.5)
SIN4_HARMONICS = (3.0 / 8.0, -0.5, 1.0 / 8.0)
