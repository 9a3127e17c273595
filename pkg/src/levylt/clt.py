"""Normalized statistics, limit-law sampling and two-sample distribution checks."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special, stats

from .constants import c_psi1, estimator_alpha_mean, estimator_mean, exact_alpha_mean, exact_mean
from .density import min_time, transition_density
from .exponent import DomainError, LevyExponent, psi_inverse
from .quadrature import DEFAULT, QuadratureConfig
from .simulate import (STREAM_LIMIT, STREAM_WALK, LatticePath, n_steps_for, path_rng,
                       run_paths, sample_increment, unit_shift_bins, _bin_index)

MIN_SAMPLES = 200


def normalizer(exp: LevyExponent, t: float) -> float:
    """t * sqrt(psi^{-1}(1/t))."""
    if not t > 0:
        raise ValueError(f"t: must be positive, got {t}")
    return t * math.sqrt(psi_inverse(exp, 1.0 / t))


def normalized_statistic(I_value, exp: LevyExponent, t: float, mean: float | None = None,
                         cfg: QuadratureConfig = DEFAULT):
    """(I - mean) / (t sqrt(psi^{-1}(1/t))); ``mean`` defaults to the exact mean of I."""
    d = normalizer(exp, t)
    m = exact_mean(exp, t, cfg) if mean is None else mean
    return (np.asarray(I_value, dtype=float) - m) / d if np.ndim(I_value) else (I_value - m) / d


# ---------------------------------------------------------------------------
# limit law  sqrt(8 c1 alpha_{beta,1}) * eta

@dataclass(frozen=True)
class LimitParams:
    """Resolution of the time-1 path behind alpha_{beta,1}."""

    dt: float = 1e-5
    h_grid: float = 0.005
    debias: bool = True


def limit_process(beta: float) -> LevyExponent:
    """The process whose time-1 local time is simulated; Brownian for beta = 2."""
    return LevyExponent.brownian() if beta == 2.0 else LevyExponent.stable(beta)


def alpha_rescale(beta: float, params: LimitParams, cfg: QuadratureConfig = DEFAULT) -> float:
    """Factor taking the simulated alpha to alpha_{beta,1} (psi = |p|^beta).

    For beta = 2 the simulated path is standard Brownian motion and
    alpha_{2,1} = alpha_1 / sqrt(2). With ``debias`` the box-kernel mean bias
    is removed multiplicatively using the exact and estimator means.
    """
    proc = limit_process(beta)
    f = 1.0 / math.sqrt(2.0) if beta == 2.0 else 1.0
    if params.debias:
        f *= exact_alpha_mean(proc, 1.0, cfg) / estimator_alpha_mean(proc, 1.0, params.dt, params.h_grid, cfg)
    return f


def _alpha_time1(proc, params, rng):
    n = n_steps_for(1.0, params.dt)
    unit_shift_bins(params.h_grid)
    origin = -params.h_grid * rng.random()
    x = np.cumsum(sample_increment(proc, params.dt, rng, n))
    idx = _bin_index(x, params.h_grid, origin)
    _, v = np.unique(idx, return_counts=True)
    v = v.astype(np.int64)
    return float(np.dot(v, v)) * params.dt**2 / params.h_grid


def limit_law_sample(beta: float, c1: float, rng: np.random.Generator,
                     params: LimitParams = LimitParams(), rescale: float | None = None) -> float:
    """One draw of sqrt(8 c1 alpha_{beta,1}) eta with eta ~ N(0,1) independent."""
    if not 1.0 < beta <= 2.0:
        raise DomainError(f"beta: must satisfy 1 < beta <= 2, got {beta}")
    if not c1 > 0:
        raise ValueError(f"c1: must be positive, got {c1}")
    f = alpha_rescale(beta, params) if rescale is None else rescale
    a = f * _alpha_time1(limit_process(beta), params, rng)
    return math.sqrt(8.0 * c1 * a) * rng.standard_normal()


def _limit_chunk(args):
    beta, c1, params, f, seed, start, stop = args
    out = np.empty((stop - start, 2))
    proc = limit_process(beta)
    for i in range(start, stop):
        rng = path_rng(seed, i, STREAM_LIMIT)
        a = f * _alpha_time1(proc, params, rng)
        out[i - start] = (math.sqrt(8.0 * c1 * a) * rng.standard_normal(), a)
    return out


def limit_law_samples(beta: float, c1: float, n: int, seed: int, params: LimitParams = LimitParams(),
                      workers: int = 1, chunk: int = 25):
    """(draws, alpha_{beta,1} values), reproducible for any ``workers``."""
    f = alpha_rescale(beta, params)
    jobs = [(beta, c1, params, f, seed, s, min(s + chunk, n)) for s in range(0, n, chunk)]
    if workers <= 1:
        parts = [_limit_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_limit_chunk, jobs))
    res = np.concatenate(parts) if parts else np.empty((0, 2))
    return res[:, 0], res[:, 1]


# ---------------------------------------------------------------------------
# lattice CLT

def dobrushin_statistic(walk: LatticePath) -> float:
    """(l_n^1 - l_n^0) / n^{1/4}."""
    if walk.n < 1:
        raise ValueError("n: walk must have at least one step")
    s = walk.positions[1:]
    return (int(np.count_nonzero(s == 1)) - int(np.count_nonzero(s == 0))) / walk.n**0.25


def dobrushin_samples(n: int, walks: int, seed: int) -> np.ndarray:
    """Batch version for long walks; walk i uses the same stream as ``random_walk(n, seed, i)``."""
    out = np.empty(walks)
    for i in range(walks):
        rng = path_rng(seed, i, STREAM_WALK)
        s = np.cumsum(2 * rng.integers(0, 2, size=n, dtype=np.int64) - 1)
        out[i] = (np.count_nonzero(s == 1) - np.count_nonzero(s == 0)) / n**0.25
    return out


# ---------------------------------------------------------------------------
# Kac moments (time-domain quadrature over densities)

def _density(exp, r, x, cfg):
    return transition_density(exp, r, x, cfg)


def kac_moment_m(exp: LevyExponent, xs, t: float, m: int, cfg: QuadratureConfig = DEFAULT,
                 nodes: int = 40) -> float:
    """E^0 prod_i L_t^{x_i} for m = 1, 2.

    m = 1 integrates p_r(x) over r in time; m = 2 sums the two orderings of
    the simplex integral of p_{r1}(x_a) p_{r2}(x_b - x_a), on a tensor
    Gauss-Jacobi rule that absorbs the r^{-1/beta} singularities.
    """
    xs = [float(v) for v in np.atleast_1d(xs)]
    if m not in (1, 2):
        raise ValueError(f"m: only m = 1, 2 are supported, got {m}")
    if len(xs) != m:
        raise ValueError(f"xs: expected {m} points, got {len(xs)}")
    if not t > 0:
        raise ValueError(f"t: must be positive, got {t}")
    inv = 1.0 / _small_time_index(exp)
    if m == 1:
        x = xs[0]
        r0 = 4.0 * min_time(exp, cfg)
        if x == 0.0:
            # r = t y^k with k = b/(b-1) cancels the r^{-1/b} singularity
            k = 1.0 / (1.0 - inv)
            y0 = (r0 / t) ** (1.0 / k)

            def f(y):
                return _density(exp, t * y**k, 0.0, cfg) * t * k * y ** (k - 1.0)

            val, _ = integrate.quad(f, y0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
            # [0, r0] from the local power law of p_r(0)
            p1, p2 = _density(exp, r0, 0.0, cfg), _density(exp, 2.0 * r0, 0.0, cfg)
            a = math.log(p1 / p2) / math.log(2.0)
            val += p1 * r0 / (1.0 - a)
        else:
            # p_r(x) = O(r) as r -> 0, so [0, r0] contributes O(r0^2)
            val, _ = integrate.quad(lambda r: _density(exp, r, x, cfg), r0, t,
                                    epsabs=1e-13, epsrel=1e-12, limit=400)
        return float(val)
    total = 0.0
    for a, b in ((xs[0], xs[1]), (xs[1], xs[0])):
        total += _simplex(exp, a, b - a, t, nodes, cfg)
    return total


def _jacobi01(n, singular, inv):
    """Nodes/weights on [0,1] for int f(s) ds, absorbing s^{-inv} when ``singular``."""
    if singular:
        x, w = special.roots_jacobi(n, 0.0, -inv)
        s = 0.5 * (x + 1.0)
        return s, w * 0.5 ** (1.0 - inv) * s**inv
    x, w = special.roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _small_time_index(exp):
    """p_r(0) ~ r^{-1/b} as r -> 0 with b the largest component index."""
    return max(b for _, b in exp.components)


def _simplex(exp, x1, d, t, n, cfg):
    """int_{r1 + r2 <= t} p_{r1}(x1) p_{r2}(d) dr1 dr2 with r1 = t a, r2 = t (1 - a) b."""
    inv = 1.0 / _small_time_index(exp)
    sa, wa = _jacobi01(n, x1 == 0.0, inv)
    sb, wb = _jacobi01(n, d == 0.0, inv)
    inner = {}
    total = 0.0
    for a, w1 in zip(sa, wa):
        r1 = t * a
        rest = t - r1
        acc = 0.0
        for b, w2 in zip(sb, wb):
            r2 = rest * b
            key = round(r2, 15)
            if key not in inner:
                inner[key] = _density(exp, r2, d, cfg)
            acc += w2 * inner[key]
        total += w1 * _density(exp, r1, x1, cfg) * rest * acc
    return t * total


# ---------------------------------------------------------------------------
# comparison

@dataclass
class CltSampleSet:
    exp: LevyExponent
    t: float
    samples: np.ndarray
    limit_samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.limit_samples = np.asarray(self.limit_samples, dtype=float)
        if not (np.all(np.isfinite(self.samples)) and np.all(np.isfinite(self.limit_samples))):
            raise ValueError("samples: non-finite values")


@dataclass
class ComparisonReport:
    moments_empirical: list[float]
    moments_limit: list[float]
    moment_z_scores: list[float]
    ks_statistic: float
    ks_p_value: float
    passed: bool
    z_max: float = 3.0
    ks_min: float = 0.01

    @property
    def pass_(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def raw_moment(y, k: int):
    """(mean of y^k, jackknife standard error)."""
    v = np.asarray(y, dtype=float) ** k
    n = len(v)
    # leave-one-out means of a sample mean give the usual s/sqrt(n) exactly
    loo = (v.sum() - v) / (n - 1)
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return float(v.mean()), se


def compare_samples(a, b, z_max: float = 3.0, ks_min: float = 0.01) -> ComparisonReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for name, s in (("samples", a), ("limit_samples", b)):
        if len(s) < MIN_SAMPLES:
            raise ValueError(f"{name}: need at least {MIN_SAMPLES} values, got {len(s)}")
        if not np.var(s) > 0:
            raise ValueError(f"{name}: degenerate (zero variance)")
    me, ml, zs = [], [], []
    for k in range(1, 5):
        ma, sa = raw_moment(a, k)
        mb, sb = raw_moment(b, k)
        se = math.hypot(sa, sb)
        me.append(ma)
        ml.append(mb)
        zs.append(0.0 if ma == mb else (ma - mb) / se)
    ks = stats.ks_2samp(a, b, method="asymp")
    passed = all(abs(z) <= z_max for z in zs) and ks.pvalue >= ks_min
    return ComparisonReport(me, ml, zs, float(ks.statistic), float(ks.pvalue), bool(passed), z_max, ks_min)


def compare_distributions(sample_set: CltSampleSet, z_max: float = 3.0, ks_min: float = 0.01) -> ComparisonReport:
    return compare_samples(sample_set.samples, sample_set.limit_samples, z_max, ks_min)


def run_clt(exp: LevyExponent, t: float, dt: float, h_grid: float, paths: int, seed: int,
            limit_paths: int | None = None, limit: LimitParams = LimitParams(), workers: int = 1,
            centering: str = "estimator", cfg: QuadratureConfig = DEFAULT) -> CltSampleSet:
    """Statistic samples at time t against draws of the limit law.

    ``centering="estimator"`` subtracts the exact mean of the simulated
    box-kernel statistic (dt, h_grid and a random grid origin included);
    ``"exact"`` subtracts the mean of the continuum functional.
    """
    if centering == "estimator":
        mean = estimator_mean(exp, t, dt, h_grid, cfg)
    elif centering == "exact":
        mean = exact_mean(exp, t, cfg)
    else:
        raise ValueError(f"centering: must be 'estimator' or 'exact', got {centering!r}")
    I, alpha = run_paths(exp, t, dt, h_grid, paths, seed, workers)
    z = normalized_statistic(I, exp, t, mean=mean)
    c1 = c_psi1(exp, cfg)
    lim, lim_alpha = limit_law_samples(exp.beta, c1, limit_paths or paths, seed, limit, workers)
    meta = {"M": paths, "limit_M": limit_paths or paths, "dt": dt, "h_grid": h_grid, "seed": seed,
            "centering": centering, "mean": mean, "normalizer": normalizer(exp, t), "c_psi_1": c1,
            "limit_dt": limit.dt, "limit_h_grid": limit.h_grid, "limit_debias": limit.debias,
            "I": I, "alpha": alpha, "limit_alpha": lim_alpha}
    return CltSampleSet(exp, t, z, lim, meta)

