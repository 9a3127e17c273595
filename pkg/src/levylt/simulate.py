"""Path simulation, box-kernel local times and the increment functionals.

Every path owns a Philox stream keyed by (master seed, stream tag, path index),
so results do not depend on how paths are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .exponent import BROWNIAN, LevyExponent

MAX_STEPS = 50_000_000
MAX_DENSE_BINS = 20_000_000

STREAM_STATISTIC = 0
STREAM_LIMIT = 1
STREAM_WALK = 2
STREAM_KAC = 3


def path_rng(seed: int, index: int, stream: int = STREAM_STATISTIC) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# increments

def standard_symmetric_stable(beta: float, rng: np.random.Generator, size=None):
    """Variates with characteristic function exp(-|l|^beta) (Chambers-Mallows-Stuck)."""
    if beta == 2.0:
        return rng.normal(0.0, math.sqrt(2.0), size)
    v = math.pi * (rng.random(size) - 0.5)
    w = rng.standard_exponential(size)
    return (np.sin(beta * v) / np.cos(v) ** (1.0 / beta)
            * (np.cos(v - beta * v) / w) ** ((1.0 - beta) / beta))


def sample_increment(exp: LevyExponent, dt: float, rng: np.random.Generator, size=None):
    """X_{t+dt} - X_t, i.e. a variate with characteristic function exp(-dt psi)."""
    if not dt > 0:
        raise ValueError(f"dt: must be positive, got {dt}")
    if exp.family == BROWNIAN:
        return rng.normal(0.0, math.sqrt(dt), size)
    out = 0.0
    for w, b in exp.components:
        out = out + (exp.scale * w * dt) ** (1.0 / b) * standard_symmetric_stable(b, rng, size)
    return out


# ---------------------------------------------------------------------------
# continuous paths and local times

@dataclass(frozen=True)
class ContinuousPath:
    exp: LevyExponent
    dt: float
    n_steps: int
    positions: np.ndarray
    seed: int = 0

    @property
    def t(self) -> float:
        return self.n_steps * self.dt


def n_steps_for(t: float, dt: float) -> int:
    n = int(round(t / dt))
    if abs(n * dt - t) > 1e-9 * max(t, 1.0):
        raise ValueError(f"t/dt must be an integer number of steps (t={t}, dt={dt})")
    return n


def simulate_path(exp: LevyExponent, t: float, dt: float, seed: int, index: int = 0,
                  max_steps: int = MAX_STEPS, stream: int = STREAM_STATISTIC) -> ContinuousPath:
    n = n_steps_for(t, dt)
    if n > max_steps:
        raise ValueError(f"t/dt = {n} steps exceeds the budget of {max_steps}")
    rng = path_rng(seed, index, stream)
    pos = np.zeros(n + 1)
    if n:
        np.cumsum(sample_increment(exp, dt, rng, n), out=pos[1:])
    return ContinuousPath(exp, dt, n, pos, seed)


@dataclass(frozen=True)
class LocalTimeField:
    """Occupation density on bins [origin + b h, origin + (b+1) h).

    ``visits`` are integer sample counts; ``counts`` = visits * dt / h.
    """

    bin_width: float
    origin: float
    visits: np.ndarray
    dt: float

    @property
    def counts(self) -> np.ndarray:
        return self.visits * (self.dt / self.bin_width)

    @property
    def t(self) -> float:
        return float(self.visits.sum()) * self.dt

    @property
    def shift_bins(self) -> int:
        return unit_shift_bins(self.bin_width)

    def centers(self) -> np.ndarray:
        return self.origin + self.bin_width * (np.arange(len(self.visits)) + 0.5)


def unit_shift_bins(h: float) -> int:
    m = int(round(1.0 / h))
    if m < 1 or abs(m * h - 1.0) > 1e-9:
        raise ValueError(f"h_grid: 1/h_grid must be an integer, got h_grid={h}")
    return m


def _bin_index(x, h, origin):
    return np.floor((np.asarray(x) - origin) / h).astype(np.int64)


def estimate_local_time(path: ContinuousPath, h_grid: float, origin: float = 0.0,
                        samples: slice | None = None) -> LocalTimeField:
    """Box-kernel local time from the skeleton X_{k dt}, k = 1..n.

    ``origin`` is any grid point; ``samples`` restricts to a block of k's.
    """
    if path.n_steps == 0:
        raise ValueError("path is empty")
    unit_shift_bins(h_grid)
    idx = _bin_index(path.positions[1:], h_grid, origin)
    lo = int(idx.min())
    hi = int(idx.max())
    if hi - lo + 1 > MAX_DENSE_BINS:
        raise ValueError(f"path range spans {hi - lo + 1} bins; too many for a dense field")
    if samples is not None:
        idx = idx[samples]
    visits = np.bincount(idx - lo, minlength=hi - lo + 1)
    return LocalTimeField(h_grid, origin + lo * h_grid, visits, path.dt)


def _sparse_visits(idx):
    return np.unique(idx, return_counts=True)


def _shift_products(keys, vals, m):
    """sum_b v[b] v[b+m] for sparse (sorted keys, values)."""
    pos = np.searchsorted(keys, keys + m)
    ok = pos < len(keys)
    ok[ok] = keys[pos[ok]] == keys[ok] + m
    return int(np.dot(vals[ok], vals[pos[ok]]))


def _padded_diff(visits, m):
    z = np.zeros(m, dtype=visits.dtype)
    padded = np.concatenate((z, visits, z))
    return padded[m:] - padded[:-m]


def functional_increment_l2(field: LocalTimeField) -> float:
    """int (L^{x+1} - L^x)^2 dx on the grid, with zero padding outside the support."""
    m = unit_shift_bins(field.bin_width)
    d = _padded_diff(field.visits.astype(np.int64), m)
    return float(np.dot(d, d)) * field.dt**2 / field.bin_width


def functional_alpha(field: LocalTimeField) -> float:
    """int (L^x)^2 dx on the grid."""
    v = field.visits.astype(np.int64)
    return float(np.dot(v, v)) * field.dt**2 / field.bin_width


def _aligned(a: LocalTimeField, b: LocalTimeField):
    if a.bin_width != b.bin_width or a.dt != b.dt:
        raise ValueError("fields must share bin width and time step")
    off = (b.origin - a.origin) / a.bin_width
    k = int(round(off))
    if abs(off - k) > 1e-6:
        raise ValueError("fields are on different grids")
    lo = min(0, k)
    n = max(len(a.visits), k + len(b.visits)) - lo
    va = np.zeros(n, dtype=np.int64)
    vb = np.zeros(n, dtype=np.int64)
    va[-lo:-lo + len(a.visits)] = a.visits
    vb[k - lo:k - lo + len(b.visits)] = b.visits
    return va, vb


def cross_increment(a: LocalTimeField, b: LocalTimeField) -> float:
    """I_{j,k}: int (L_a^{x+1} - L_a^x)(L_b^{x+1} - L_b^x) dx."""
    va, vb = _aligned(a, b)
    m = unit_shift_bins(a.bin_width)
    return float(np.dot(_padded_diff(va, m), _padded_diff(vb, m))) * a.dt**2 / a.bin_width


def cross_alpha(a: LocalTimeField, b: LocalTimeField) -> float:
    """alpha_{j,k}: int L_a^x L_b^x dx."""
    va, vb = _aligned(a, b)
    return float(np.dot(va, vb)) * a.dt**2 / a.bin_width


def block_fields(path: ContinuousPath, h_grid: float, l: int, origin: float = 0.0):
    """Local times of the l consecutive time blocks, on the grid of the full path."""
    if l < 1 or path.n_steps % l:
        raise ValueError(f"l={l} must divide n_steps={path.n_steps}")
    full = estimate_local_time(path, h_grid, origin)
    size = path.n_steps // l
    blocks = []
    for j in range(l):
        f = estimate_local_time(path, h_grid, origin, slice(j * size, (j + 1) * size))
        blocks.append(LocalTimeField(h_grid, full.origin, f.visits, path.dt))
    return full, blocks


def additivity_check(exp: LevyExponent, t: float, l: int, dt: float, seed: int,
                     h_grid: float = 0.1) -> float:
    """max_x |L_t^x - sum_j L_{t/l}^x o theta_{jt/l}| on the grid (0 for box kernels)."""
    path = simulate_path(exp, t, dt, seed)
    full, blocks = block_fields(path, h_grid, l)
    total = np.zeros_like(full.visits)
    for b in blocks:
        total[: len(b.visits)] += b.visits
    return float(np.max(np.abs(full.visits - total))) * dt / h_grid


def path_functionals(exp: LevyExponent, t: float, dt: float, h_grid: float, seed: int,
                     index: int, stream: int = STREAM_STATISTIC):
    """(I, alpha) for one path, with a uniformly random grid origin."""
    n = n_steps_for(t, dt)
    m = unit_shift_bins(h_grid)
    rng = path_rng(seed, index, stream)
    origin = -h_grid * rng.random()
    x = np.cumsum(sample_increment(exp, dt, rng, n))
    idx = _bin_index(x, h_grid, origin)
    lo, hi = int(idx.min()), int(idx.max())
    if hi - lo + 1 <= max(50 * n, 1_000_000):
        v = np.bincount(idx - lo).astype(np.int64)
        d = _padded_diff(v, m)
        sq, inc = int(np.dot(v, v)), int(np.dot(d, d))
    else:
        keys, v = _sparse_visits(idx)
        v = v.astype(np.int64)
        sq = int(np.dot(v, v))
        inc = 2 * sq - 2 * _shift_products(keys, v, m)
    scale = dt * dt / h_grid
    return inc * scale, sq * scale


def _chunk_worker(args):
    exp, t, dt, h, seed, start, stop, stream = args
    out = np.empty((stop - start, 2))
    for i in range(start, stop):
        out[i - start] = path_functionals(exp, t, dt, h, seed, i, stream)
    return out


def run_paths(exp: LevyExponent, t: float, dt: float, h_grid: float, n_paths: int, seed: int,
              workers: int = 1, stream: int = STREAM_STATISTIC, chunk: int = 25):
    """(I, alpha) arrays over ``n_paths`` independent paths; identical for any ``workers``."""
    jobs = [(exp, t, dt, h_grid, seed, s, min(s + chunk, n_paths), stream)
            for s in range(0, n_paths, chunk)]
    if workers <= 1:
        parts = [_chunk_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_worker, jobs))
    res = np.concatenate(parts) if parts else np.empty((0, 2))
    return res[:, 0], res[:, 1]


# ---------------------------------------------------------------------------
# lattice walks

@dataclass(frozen=True)
class LatticePath:
    steps: np.ndarray
    positions: np.ndarray
    seed: int = 0

    @property
    def n(self) -> int:
        return len(self.steps)

    @classmethod
    def from_steps(cls, steps, seed: int = 0) -> "LatticePath":
        steps = np.asarray(steps, dtype=np.int64)
        if steps.size and not np.all(np.abs(steps) == 1):
            raise ValueError("steps must be +1 or -1")
        pos = np.concatenate(([0], np.cumsum(steps))).astype(np.int64)
        return cls(steps, pos, seed)


def random_walk(n: int, seed: int, index: int = 0) -> LatticePath:
    rng = path_rng(seed, index, STREAM_WALK)
    steps = 2 * rng.integers(0, 2, size=n, dtype=np.int64) - 1
    return LatticePath.from_steps(steps, seed)


def rw_local_times(path: LatticePath) -> dict[int, int]:
    """x -> #{1 <= j <= n : S_j = x}."""
    keys, counts = np.unique(path.positions[1:], return_counts=True)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def lattice_field(path: LatticePath) -> LocalTimeField:
    """Unit-width field whose bins are centred on the integers."""
    if path.n == 0:
        raise ValueError("path is empty")
    s = path.positions[1:]
    lo = int(s.min())
    return LocalTimeField(1.0, lo - 0.5, np.bincount(s - lo), 1.0)


@numba.njit(cache=True)
def _pair_sum(s):
    same = 0
    adjacent = 0
    n = s.shape[0]
    for i in range(n):
        si = s[i]
        for j in range(n):
            d = si - s[j]
            if d == 0:
                same += 1
            elif d == 1 or d == -1:
                adjacent += 1
    return 2 * same - adjacent


def hamiltonian_double_sum(path: LatticePath) -> int:
    """2 sum_{i,j} 1{S_i = S_j} - sum_{i,j} 1{|S_i - S_j| = 1}, brute force over pairs."""
    return int(_pair_sum(path.positions[1:]))


def hamiltonian_increments(path: LatticePath) -> int:
    """sum_x (l^{x+1} - l^x)^2."""
    if path.n == 0:
        return 0
    s = path.positions[1:]
    lo = int(s.min())
    ell = np.bincount(s - lo).astype(np.int64)
    d = _padded_diff(ell, 1)
    return int(np.dot(d, d))


class InvariantViolation(AssertionError):
    pass


def rw_hamiltonian(path: LatticePath) -> int:
    a = hamiltonian_double_sum(path)
    b = hamiltonian_increments(path)
    if a != b:
        raise InvariantViolation(f"double-sum form {a} != increment form {b}")
    return a


def dobrushin_numerator(path: LatticePath) -> int:
    s = path.positions[1:]
    return int(np.count_nonzero(s == 1)) - int(np.count_nonzero(s == 0))
