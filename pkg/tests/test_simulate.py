import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levylt import simulate as sim
from levylt.constants import estimator_mean
from levylt.exponent import LevyExponent, psi

BM = LevyExponent.brownian()
S15 = LevyExponent.stable(1.5)
MIX = LevyExponent.mixture([(1.0, 1.3), (0.5, 2.0)])


def rng(seed=0):
    return np.random.default_rng(seed)


def test_brownian_increment_variance():
    x = sim.sample_increment(BM, 1.0, rng(1), 100_000)
    assert np.var(x) == pytest.approx(1.0, abs=0.02)


def test_stable2_increment_variance():
    x = sim.sample_increment(LevyExponent.stable(2.0), 1.0, rng(2), 100_000)
    assert np.var(x) == pytest.approx(2.0, abs=0.05)


@pytest.mark.parametrize("exp", [S15, LevyExponent.stable(1.2, 2.0), MIX], ids=lambda e: e.label)
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_increment_characteristic_function(exp, lam):
    dt = 0.7
    x = sim.sample_increment(exp, dt, rng(3), 100_000)
    c = np.cos(lam * x)
    target = math.exp(-dt * psi(exp, lam))
    assert abs(c.mean() - target) <= 3 * c.std() / math.sqrt(len(c))


def test_increment_needs_positive_step():
    with pytest.raises(ValueError, match="dt"):
        sim.sample_increment(BM, 0.0, rng())


def test_empty_time_path():
    p = sim.simulate_path(S15, 0.0, 0.01, 5)
    assert p.positions.tolist() == [0.0] and p.n_steps == 0


def test_path_invariants_and_determinism():
    a = sim.simulate_path(MIX, 3.0, 0.01, 42)
    b = sim.simulate_path(MIX, 3.0, 0.01, 42)
    c = sim.simulate_path(MIX, 3.0, 0.01, 43)
    assert a.positions[0] == 0 and len(a.positions) == a.n_steps + 1 == 301
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_step_budget():
    with pytest.raises(ValueError, match="budget"):
        sim.simulate_path(BM, 10.0, 0.01, 1, max_steps=100)


def test_non_integer_step_count():
    with pytest.raises(ValueError, match="t/dt"):
        sim.simulate_path(BM, 1.0, 0.3, 1)


def test_brownian_range_tail():
    inside = sum(np.max(np.abs(sim.simulate_path(BM, 100.0, 0.01, s).positions)) < 100 for s in range(100))
    assert inside >= 99


def test_constant_path_single_bin():
    path = sim.ContinuousPath(BM, 1.0, 10, np.zeros(11))
    f = sim.estimate_local_time(path, 0.1)
    assert f.counts.tolist() == [pytest.approx(100.0)]
    assert sim.functional_alpha(f) == pytest.approx(100.0**2 * 0.1)


def test_empty_path_rejected():
    with pytest.raises(ValueError, match="empty"):
        sim.estimate_local_time(sim.simulate_path(BM, 0.0, 0.1, 1), 0.1)


@pytest.mark.parametrize("h", [0.3, 0.15, 2.0])
def test_grid_must_divide_unit(h):
    path = sim.simulate_path(BM, 1.0, 0.01, 1)
    with pytest.raises(ValueError, match="h_grid"):
        sim.estimate_local_time(path, h)


@given(st.integers(0, 2**32), st.sampled_from([1.0, 0.5, 0.25, 0.1, 0.05]), st.floats(-3, 3),
       st.sampled_from([BM, S15, MIX]))
def test_mass_conservation_and_occupation_formula(seed, h, origin, exp):
    path = sim.simulate_path(exp, 2.0, 0.01, seed)
    f = sim.estimate_local_time(path, h, origin)
    assert np.all(f.counts >= 0)
    assert abs(f.counts.sum() * h - path.t) <= 1e-12 * path.n_steps
    # bin-constant g
    g_bins = np.sin(np.arange(len(f.counts)) * 0.7)
    idx = np.floor((path.positions[1:] - f.origin) / h).astype(int)
    assert np.sum(g_bins * f.counts) * h == pytest.approx(np.sum(g_bins[idx]) * path.dt, abs=1e-12)


@given(st.integers(0, 2**32))
def test_cauchy_schwarz_lower_bound(seed):
    path = sim.simulate_path(S15, 5.0, 0.01, seed)
    f = sim.estimate_local_time(path, 0.1)
    support = np.count_nonzero(f.visits) * f.bin_width
    assert sim.functional_alpha(f) >= path.t**2 / support * (1 - 1e-12)


def test_zero_field():
    f = sim.LocalTimeField(0.1, 0.0, np.zeros(30, dtype=np.int64), 0.01)
    assert sim.functional_increment_l2(f) == 0.0 and sim.functional_alpha(f) == 0.0


def test_single_bin_unit_grid():
    f = sim.LocalTimeField(1.0, 0.0, np.array([3]), 1.0)
    assert sim.functional_increment_l2(f) == 2 * 9.0
    assert sim.functional_alpha(f) == 9.0


def test_rw_examples():
    w = sim.LatticePath.from_steps([1, 1, -1])
    assert w.positions.tolist() == [0, 1, 2, 1]
    assert sim.rw_local_times(w) == {1: 2, 2: 1}
    assert sim.rw_hamiltonian(w) == 6
    assert sim.rw_hamiltonian(sim.LatticePath.from_steps([])) == 0
    assert sim.rw_local_times(sim.LatticePath.from_steps([])) == {}
    assert sim.rw_hamiltonian(sim.LatticePath.from_steps([-1])) == 2


def test_rw_rejects_non_unit_steps():
    with pytest.raises(ValueError, match="steps"):
        sim.LatticePath.from_steps([1, 2])


@given(st.lists(st.sampled_from([-1, 1]), max_size=300))
def test_rw_forms_agree(steps):
    w = sim.LatticePath.from_steps(steps)
    assert sum(sim.rw_local_times(w).values()) == len(steps)
    h = sim.rw_hamiltonian(w)
    if steps:
        assert sim.functional_increment_l2(sim.lattice_field(w)) == h


def test_rw_mismatch_raises(monkeypatch):
    monkeypatch.setattr(sim, "hamiltonian_increments", lambda p: -1)
    with pytest.raises(sim.InvariantViolation):
        sim.rw_hamiltonian(sim.LatticePath.from_steps([1, -1]))


def test_random_walk_stream():
    a, b = sim.random_walk(500, 7, 3), sim.random_walk(500, 7, 3)
    assert np.array_equal(a.steps, b.steps) and set(np.unique(a.steps)) <= {-1, 1}


@pytest.mark.parametrize("l", [1, 2, 4, 5])
def test_additivity_exact(l):
    assert sim.additivity_check(S15, 10.0, l, 0.01, 9) == 0.0


def test_additivity_requires_divisor():
    with pytest.raises(ValueError, match="divide"):
        sim.additivity_check(BM, 1.0, 3, 0.01, 1)


@pytest.mark.parametrize("exp", [BM, S15], ids=lambda e: e.label)
def test_cross_term_decomposition(exp):
    path = sim.simulate_path(exp, 20.0, 0.01, 17)
    full, blocks = sim.block_fields(path, 0.1, 4, origin=-0.037)
    I = sim.functional_increment_l2(full)
    total = sum(sim.cross_increment(a, b) for a in blocks for b in blocks)
    assert total == pytest.approx(I, abs=1e-12)
    A = sum(sim.cross_alpha(a, b) for a in blocks for b in blocks)
    assert A == pytest.approx(sim.functional_alpha(full), abs=1e-12)


def test_path_functionals_match_field_route():
    t, dt, h, seed, i = 10.0, 0.01, 0.1, 5, 2
    I, a = sim.path_functionals(S15, t, dt, h, seed, i)
    r = sim.path_rng(seed, i)
    origin = -h * r.random()
    pos = np.concatenate(([0.0], np.cumsum(sim.sample_increment(S15, dt, r, 1000))))
    f = sim.estimate_local_time(sim.ContinuousPath(S15, dt, 1000, pos), h, origin)
    assert I == pytest.approx(sim.functional_increment_l2(f), rel=1e-12)
    assert a == pytest.approx(sim.functional_alpha(f), rel=1e-12)


def test_sparse_shift_products():
    v = rng(4).integers(0, 5, 200)
    keys = np.flatnonzero(v)
    dense = int(np.dot(v[:-10], v[10:]))
    assert sim._shift_products(keys, v[keys].astype(np.int64), 10) == dense


def test_run_paths_independent_of_workers():
    a = sim.run_paths(S15, 5.0, 0.01, 0.1, 30, 11, workers=1, chunk=7)
    b = sim.run_paths(S15, 5.0, 0.01, 0.1, 30, 11, workers=3, chunk=4)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_monte_carlo_mean_matches_estimator_mean():
    t, dt, h = 50.0, 0.005, 0.1
    I, _ = sim.run_paths(BM, t, dt, h, 1000, 123)
    se = I.std(ddof=1) / math.sqrt(len(I))
    assert abs(I.mean() - estimator_mean(BM, t, dt, h)) <= 3 * se


def test_alpha_growth_brownian():
    ts = np.array([25.0, 100.0, 400.0])
    means = [sim.run_paths(BM, t, 0.01, 0.1, 200, 31)[1].mean() for t in ts]
    slope = np.polyfit(np.log(ts), np.log(means), 1)[0]
    assert slope == pytest.approx(1.5, abs=0.1)


def test_stable_scaling_of_alpha():
    # E alpha_{4t} / E alpha_t = 4^{2 - 1/beta}; grids scaled so both runs see the same resolution
    a1 = sim.run_paths(S15, 10.0, 0.001, 0.05, 500, 77)[1]
    a4 = sim.run_paths(S15, 40.0, 0.004, 0.125, 500, 78)[1]
    r = a4.mean() / a1.mean()
    se = r * math.hypot(a1.std(ddof=1) / a1.mean(), a4.std(ddof=1) / a4.mean()) / math.sqrt(500)
    assert abs(r - 4 ** (2 - 1 / 1.5)) <= 3 * se
