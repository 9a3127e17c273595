"""Symmetric Lévy exponents with closed-form derivatives, and a numerical audit
of the regularity hypotheses the CLT needs."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

STABLE = "stable"
BROWNIAN = "brownian"
MIXTURE = "mixture"
FAMILIES = (STABLE, BROWNIAN, MIXTURE)

EPS_GUARD = 1e-3


class DomainError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LevyExponent:
    """psi(l) = scale * sum_i w_i |l|^beta_i.

    ``stable`` has one component of weight 1, ``brownian`` is psi = l^2/2
    (scale fixed at 1), ``mixture`` carries explicit (weight, beta) pairs.
    """

    family: str
    components: tuple[tuple[float, float], ...]
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"family: unknown family {self.family!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"scale: must be positive, got {self.scale}")
        if not self.components:
            raise DomainError("components: at least one component required")
        for w, b in self.components:
            if not (w > 0 and math.isfinite(w)):
                raise DomainError(f"weight: must be positive, got {w}")
            if not (1.0 < b <= 2.0):
                raise DomainError(f"beta: must satisfy 1 < beta <= 2, got {b}")

    @classmethod
    def stable(cls, beta: float, scale: float = 1.0) -> "LevyExponent":
        return cls(STABLE, ((1.0, float(beta)),), float(scale))

    @classmethod
    def brownian(cls) -> "LevyExponent":
        return cls(BROWNIAN, ((0.5, 2.0),), 1.0)

    @classmethod
    def mixture(cls, parts: Sequence[tuple[float, float]], scale: float = 1.0) -> "LevyExponent":
        return cls(MIXTURE, tuple((float(w), float(b)) for w, b in parts), float(scale))

    @classmethod
    def from_dict(cls, d: dict) -> "LevyExponent":
        family = str(d.get("family", "")).lower()
        if family in ("brownian", "brownianhalf", "brownian_half"):
            return cls.brownian()
        if family == STABLE:
            if "beta" not in d:
                raise DomainError("beta: required for the stable family")
            return cls.stable(float(d["beta"]), float(d.get("scale", 1.0)))
        if family == MIXTURE:
            parts = d.get("components") or d.get("parts")
            if not parts:
                raise DomainError("components: required for the mixture family")
            pairs = [(p["weight"], p["beta"]) if isinstance(p, dict) else tuple(p) for p in parts]
            return cls.mixture(pairs, float(d.get("scale", 1.0)))
        raise DomainError(f"family: unknown family {d.get('family')!r}")

    def to_dict(self) -> dict:
        if self.family == BROWNIAN:
            return {"family": BROWNIAN}
        if self.family == STABLE:
            return {"family": STABLE, "beta": self.beta, "scale": self.scale}
        return {
            "family": MIXTURE,
            "components": [{"weight": w, "beta": b} for w, b in self.components],
            "scale": self.scale,
        }

    @property
    def beta(self) -> float:
        """Index of regular variation at 0 (the smallest component index)."""
        return min(b for _, b in self.components)

    @property
    def label(self) -> str:
        if self.family == BROWNIAN:
            return "brownian"
        if self.family == STABLE:
            s = "" if self.scale == 1.0 else f",scale={self.scale:g}"
            return f"stable({self.beta:g}{s})"
        inner = "+".join(f"{w:g}|p|^{b:g}" for w, b in self.components)
        return f"mixture({inner})"

    def _terms(self):
        return [(self.scale * w, b) for w, b in self.components]

    def __call__(self, lam):
        return psi(self, lam)


def psi(exp: LevyExponent, lam):
    a = np.abs(np.asarray(lam, dtype=float))
    out = sum(c * a**b for c, b in exp._terms())
    return float(out) if np.ndim(out) == 0 else out


def psi_derivatives(exp: LevyExponent, lam):
    """(psi', psi'') at lam > 0."""
    a = np.asarray(lam, dtype=float)
    if np.any(a < 0):
        raise DomainError("lambda: derivatives are defined for lambda > 0")
    if np.any(a == 0) and any(b < 2 for _, b in exp.components):
        raise DomainError("lambda: derivative is singular at the origin for beta < 2")
    d1 = sum(c * b * a ** (b - 1) for c, b in exp._terms())
    d2 = sum(c * b * (b - 1) * a ** (b - 2) for c, b in exp._terms())
    if np.ndim(d1) == 0:
        return float(d1), float(d2)
    return d1, d2


def psi_inverse(exp: LevyExponent, y, max_iter: int = 400, rtol: float = 1e-14):
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0):
        raise DomainError("y: psi_inverse needs y >= 0")
    if len(exp.components) == 1:
        c, b = exp._terms()[0]
        out = (y_arr / c) ** (1.0 / b)
        return float(out) if out.ndim == 0 else out
    if y_arr.ndim:
        return np.array([psi_inverse(exp, v, max_iter, rtol) for v in y_arr.ravel()]).reshape(y_arr.shape)
    return _bisect_inverse(exp, float(y_arr), max_iter, rtol)


def _bisect_inverse(exp, y, max_iter, rtol):
    if y == 0.0:
        return 0.0
    # start from the dominant-term guess so tiny/huge y need few doublings
    c, b = min(exp._terms(), key=lambda cb: cb[1])
    hi = max((y / c) ** (1.0 / b), 1e-300)
    lo = 0.0
    for _ in range(2000):
        if psi(exp, hi) >= y:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"psi_inverse: could not bracket y={y}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if psi(exp, mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            return 0.5 * (lo + hi)
    raise ConvergenceError(f"psi_inverse: bisection did not converge for y={y} after {max_iter} steps")


@dataclass
class ConditionReport:
    integrability_value: float
    derivative_ratio_sup: float
    tail_integrals: tuple[float, float, float]
    passed: bool
    ratio_d1: float = float("nan")
    ratio_d2: float = float("nan")
    reasons: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _tail_estimate(f, lam_max):
    """Power-law extrapolation of int_{lam_max}^inf f from two samples."""
    f1, f2 = f(lam_max / 2), f(lam_max)
    if f2 <= 0 or f1 <= 0:
        return 0.0
    a = math.log(f1 / f2) / math.log(2.0)
    if a <= 1.0:
        return math.inf
    return f2 * lam_max / (a - 1.0)


def _integral_1_to_inf(f, lam_max, cfg):
    # piecewise over decades keeps QUADPACK inside its subdivision limit
    edges = np.geomspace(1.0, lam_max, int(round(math.log10(lam_max))) + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions)
        if not math.isfinite(val):
            raise ConvergenceError(f"quadrature failed on [{a}, {b}]")
        total += val
    return total + _tail_estimate(f, lam_max)


def verify_conditions(exp: LevyExponent, cfg=None, caps: dict | None = None, eps_guard: float = EPS_GUARD) -> ConditionReport:
    from .quadrature import QuadratureConfig

    cfg = cfg or QuadratureConfig()
    caps = {"integrability": 1e6, "ratio": 1e3, "tail": 1e6, **(caps or {})}
    lam_max = cfg.p_truncation
    reasons = []

    integ = 2.0 * _integral_1_to_inf(lambda l: 1.0 / (1.0 + psi(exp, l)), lam_max, cfg)
    head, _ = integrate.quad(lambda l: 1.0 / (1.0 + psi(exp, l)), 0.0, 1.0)
    integ += 2.0 * head

    grid = np.geomspace(1e-8, 1.0, 400)
    d1, d2 = psi_derivatives(exp, grid)
    p = psi(exp, grid)
    r1 = float(np.max(grid * np.abs(d1) / p))
    r2 = float(np.max(grid**2 * np.abs(d2) / p))

    def t1(l):
        return abs(psi_derivatives(exp, l)[0]) / psi(exp, l) ** 2

    def t2(l):
        return psi_derivatives(exp, l)[0] ** 2 / psi(exp, l) ** 2

    def t3(l):
        return abs(psi_derivatives(exp, l)[1]) / psi(exp, l)

    tails = tuple(_integral_1_to_inf(f, lam_max, cfg) for f in (t1, t2, t3))

    values = [integ, r1, r2, *tails]
    if not all(math.isfinite(v) for v in values):
        reasons.append("non-finite integral or ratio")
    if integ > caps["integrability"]:
        reasons.append(f"integrability integral {integ:.3g} exceeds cap")
    if max(r1, r2) > caps["ratio"]:
        reasons.append(f"derivative ratio {max(r1, r2):.3g} exceeds cap")
    if any(v > caps["tail"] for v in tails):
        reasons.append("tail integral exceeds cap")
    if exp.beta <= 1.0 + eps_guard:
        reasons.append(f"beta={exp.beta} within guard {eps_guard} of 1")
    return ConditionReport(
        integrability_value=integ,
        derivative_ratio_sup=max(r1, r2),
        tail_integrals=tails,
        passed=not reasons,
        ratio_d1=r1,
        ratio_d2=r2,
        reasons=reasons,
    )


def scaling_constant_profile(exp: LevyExponent, ts) -> np.ndarray:
    """t * psi^{-1}(1/t)^2, bounded for t >= t0 since beta <= 2."""
    ts = np.asarray(ts, dtype=float)
    return ts * psi_inverse(exp, 1.0 / ts) ** 2
