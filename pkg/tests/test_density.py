import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from levylt.density import (DensityRequest, delta1_density, delta2_density, evaluate,
                            transition_density, u_integral, v_integral, w_integral)
from levylt.exponent import LevyExponent, psi_inverse
from levylt.quadrature import QuadratureError

BM = LevyExponent.brownian()
S15 = LevyExponent.stable(1.5)
MIX = LevyExponent.mixture([(1.0, 1.3), (0.5, 2.0)])
FAMILIES = [BM, S15, LevyExponent.stable(1.2), LevyExponent.stable(2.0), MIX]


def gauss(s, x):
    return np.exp(-np.asarray(x) ** 2 / (2 * s)) / math.sqrt(2 * math.pi * s)


def test_brownian_density_is_standard_normal():
    x = np.linspace(-6, 6, 49)
    assert np.allclose(transition_density(BM, 1.0, x), gauss(1.0, x), atol=1e-14)
    assert transition_density(BM, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-13)


def test_stable_density_at_origin_closed_form():
    assert transition_density(S15, 1.0, 0.0) == pytest.approx(special.gamma(1 + 1 / 1.5) / math.pi, rel=1e-12)


def test_stable_self_similarity_example():
    assert transition_density(S15, 2**1.5, 0.0) == pytest.approx(transition_density(S15, 1.0, 0.0) / 2, rel=1e-12)


@given(st.floats(min_value=1.1, max_value=2.0), st.floats(min_value=0.05, max_value=50.0),
       st.floats(min_value=-20.0, max_value=20.0))
def test_stable_scaling(beta, s, x):
    exp = LevyExponent.stable(beta)
    lhs = transition_density(exp, s, x)
    rhs = s ** (-1 / beta) * transition_density(exp, 1.0, s ** (-1 / beta) * x)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-13)


@given(st.sampled_from(FAMILIES), st.floats(min_value=0.01, max_value=100.0),
       st.floats(min_value=0.0, max_value=30.0))
def test_symmetry(exp, s, x):
    assert transition_density(exp, s, x) == pytest.approx(transition_density(exp, s, -x), abs=1e-12)


def _density_by_decade(exp, s, x):
    # panel width follows max|x|, so far points are evaluated separately
    edges = [0, 10, 100, 1000, np.inf]
    out = np.empty_like(x)
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (np.abs(x) >= lo) & (np.abs(x) < hi)
        if m.any():
            out[m] = transition_density(exp, s, x[m])
    return out


def _mass(exp, s):
    x = np.concatenate((np.linspace(0, 10, 2001), np.geomspace(10, 2000, 801)[1:]))
    p = _density_by_decade(exp, s, x)
    core = integrate.simpson(p[:2001], x=x[:2001]) + integrate.trapezoid(p[2000:], x[2000:])
    tail = 0.0
    if p[-1] > 1e-14:
        a = math.log(p[-2] / p[-1]) / math.log(x[-1] / x[-2])
        tail = x[-1] * p[-1] / (a - 1)
    return 2 * (core + tail)


@pytest.mark.parametrize("exp", [BM, S15, MIX], ids=lambda e: e.label)
def test_normalization(exp):
    assert _mass(exp, 1.0) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("exp", [BM, S15], ids=lambda e: e.label)
def test_chapman_kolmogorov(exp):
    y = np.arange(-60, 60.0001, 0.05)
    pr = _density_by_decade(exp, 0.7, y)
    for x in (0.0, 1.5, 4.0):
        ps = _density_by_decade(exp, 1.3, x - y)
        assert integrate.trapezoid(ps * pr, y) == pytest.approx(transition_density(exp, 2.0, x), abs=1e-4)


def test_delta1_brownian_closed_form():
    expected = (math.exp(-0.5) - 1) / math.sqrt(2 * math.pi)
    assert delta1_density(BM, 1.0, 0.0, 1.0) == pytest.approx(expected, abs=1e-13)
    assert expected == pytest.approx(-0.1569716, abs=1e-7)


@pytest.mark.parametrize("exp", FAMILIES, ids=lambda e: e.label)
def test_zero_step_gives_zero(exp):
    assert delta1_density(exp, 1.0, 0.3, 0.0) == 0.0
    assert delta2_density(exp, 1.0, 0.3, 0.0) == 0.0
    assert v_integral(exp, 0.3, 5.0, 0.0) == 0.0
    assert w_integral(exp, 0.3, 5.0, 0.0) == 0.0


@pytest.mark.parametrize("exp", FAMILIES, ids=lambda e: e.label)
@pytest.mark.parametrize("s, x, gamma", [(1.0, 0.0, 1.0), (0.5, 1.7, 1.0), (3.0, -2.0, 0.5), (10.0, 5.0, 2.0)])
def test_differences_match_definitions(exp, s, x, gamma):
    p = lambda y: transition_density(exp, s, y)
    assert delta1_density(exp, s, x, gamma) == pytest.approx(p(x + gamma) - p(x), abs=1e-8)
    assert delta2_density(exp, s, x, gamma) == pytest.approx(2 * p(x) - p(x + gamma) - p(x - gamma), abs=1e-8)


def test_second_difference_brownian_example():
    # 2 p_1(0) - p_1(1) - p_1(-1) is positive
    v = delta2_density(BM, 1.0, 0.0, 1.0)
    assert v == pytest.approx(2 * (1 - math.exp(-0.5)) / math.sqrt(2 * math.pi), abs=1e-13)
    assert v == pytest.approx(0.3139431, abs=1e-7)


@given(st.sampled_from(FAMILIES), st.floats(min_value=0.05, max_value=50.0),
       st.floats(min_value=0.1, max_value=4.0))
def test_origin_relation(exp, s, gamma):
    d1 = delta1_density(exp, s, 0.0, gamma)
    d2 = delta2_density(exp, s, 0.0, gamma)
    assert d2 == pytest.approx(-2 * d1, abs=1e-10)
    assert abs(d2) == pytest.approx(2 * abs(d1), abs=1e-10)


@pytest.mark.parametrize("exp", FAMILIES, ids=lambda e: e.label)
def test_second_difference_far_field(exp):
    assert abs(delta2_density(exp, 1.0, 100.0, 1.0)) < 1e-6


def test_u_brownian_example():
    assert u_integral(BM, 0.0, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-12)


@pytest.mark.parametrize("exp", FAMILIES, ids=lambda e: e.label)
def test_u_time_domain_oracle(exp):
    x = 0.8
    oracle, _ = integrate.quad(lambda r: transition_density(exp, r, x), 1e-6, 3.0, limit=200)
    assert u_integral(exp, x, 3.0) == pytest.approx(oracle, abs=1e-8)


@pytest.mark.parametrize("exp", FAMILIES, ids=lambda e: e.label)
def test_u_monotone_in_t(exp):
    vals = [u_integral(exp, 0.0, t) for t in np.geomspace(0.01, 1e4, 15)]
    assert np.all(np.diff(vals) > 0)


def test_u_envelope_stable():
    env = lambda t: t * psi_inverse(S15, 1 / t)
    C = u_integral(S15, 0.0, 10.0) / env(10.0)
    for t in (1e2, 1e3):
        assert u_integral(S15, 0.0, t) <= C * env(t) * (1 + 1e-9)


def test_v_brownian_subtraction_oracle():
    oracle, _ = integrate.quad(lambda s: abs(gauss(s, 1.0) - gauss(s, 0.0)), 0, 10, epsrel=1e-12, limit=200)
    assert v_integral(BM, 0.0, 10.0, 1.0) == pytest.approx(oracle, rel=1e-4)


@pytest.mark.parametrize("exp", [BM, S15], ids=lambda e: e.label)
def test_v_logarithmic_growth(exp):
    for t in (10.0, 100.0):
        assert v_integral(exp, 0.0, t * t) / v_integral(exp, 0.0, t) <= 2.5


def test_w_bounded_at_origin():
    c_w = w_integral(S15, 0.0, 10.0)
    assert w_integral(S15, 0.0, 1e4) <= 3 * c_w


def test_w_far_field_envelope():
    t, x = 100.0, 50.0
    env = w_integral(S15, 0.0, t) * t * psi_inverse(S15, 1 / t) / x**2
    assert w_integral(S15, x, t) <= env


def test_w_brownian_oracle():
    f = lambda s: abs(2 * gauss(s, 0.5) - gauss(s, 1.5) - gauss(s, -0.5))
    oracle, _ = integrate.quad(f, 0, 20, points=[0.1, 1.0], epsrel=1e-12, limit=400)
    assert w_integral(BM, 0.5, 20.0, 1.0) == pytest.approx(oracle, rel=1e-4)


ENVELOPES = {
    "p": (lambda e, s, x: transition_density(e, s, x),
          lambda q, x: np.minimum(q, 1 / (q * x**2))),
    "d1": (lambda e, s, x: np.abs(delta1_density(e, s, x)),
           lambda q, x: np.minimum(q**2, (1 + np.log(np.maximum(np.abs(x), 1))) / x**2)),
    "d2": (lambda e, s, x: np.abs(delta2_density(e, s, x)),
           lambda q, x: np.minimum(q**3, q / x**2)),
}


@pytest.mark.parametrize("kind", sorted(ENVELOPES))
@pytest.mark.parametrize("exp", [BM, S15, MIX], ids=lambda e: e.label)
def test_fitted_envelopes(exp, kind):
    value, bound = ENVELOPES[kind]
    x = np.concatenate((np.linspace(0.01, 20, 400), np.geomspace(20, 500, 100)))
    s0 = 10.0
    C = np.max(value(exp, s0, x) / bound(psi_inverse(exp, 1 / s0), x))
    for s in (30.0, 100.0, 1000.0):
        ratio = value(exp, s, x) / bound(psi_inverse(exp, 1 / s), x)
        assert np.max(ratio) <= 2 * C


def test_small_time_outside_truncation_is_diagnosed():
    with pytest.raises(QuadratureError, match="p_truncation"):
        transition_density(S15, 1e-12, 0.0)


def test_non_positive_time_names_field():
    with pytest.raises(ValueError, match="s:"):
        transition_density(BM, 0.0, 0.0)
    with pytest.raises(ValueError, match="s:"):
        DensityRequest(BM, -1.0, 0.0)
    with pytest.raises(ValueError, match="t:"):
        u_integral(BM, 0.0, 0.0)


def test_evaluate_dispatch():
    req = DensityRequest(BM, 1.0, 0.0)
    val, err = evaluate(req, "p")
    assert val == pytest.approx(1 / math.sqrt(2 * math.pi)) and err >= 0
    assert evaluate(req, "u")[0] == pytest.approx(math.sqrt(2 / math.pi))
    with pytest.raises(ValueError, match="op"):
        evaluate(req, "q")
