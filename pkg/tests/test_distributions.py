import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import kv

from relboltz.distributions import (WeightParams, bessel_k2, chi1, chi2, jsol_constant, juttner,
                                    juttner_normalization, invariant_identity_residual, maxwellian,
                                    sharp_asymp_check, sharp_asymp_constant, sharp_asymp_ratio, taylor_remainder,
                                    weight_newt, weight_rel)
from relboltz.errors import DomainError
from relboltz.limit_harness import rate_fit

from conftest import random_events


def test_k2_values():
    assert bessel_k2(1.0) == pytest.approx(1.6248389, rel=1e-7)
    assert bessel_k2(2.0) == pytest.approx(0.2537598, rel=1e-6)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 3.0, 10.0, 50.0, 400.0])
def test_k2_against_reference(x):
    assert bessel_k2(x) == pytest.approx(kv(2, x), rel=1e-8)


def test_k2_asymptotic():
    x = 100.0
    asym = math.sqrt(math.pi / 2) * x ** -0.5 * math.exp(-x)
    assert bessel_k2(x) == pytest.approx(asym, rel=0.02)


def test_k2_domain():
    with pytest.raises(DomainError):
        bessel_k2(0.05)


def test_juttner_value_at_rest():
    expected = math.exp(-1) / (4 * math.pi * kv(2, 1.0))
    assert juttner(np.zeros(3), 1.0) == pytest.approx(expected, rel=1e-12)
    assert juttner(np.zeros(3), 1.0) == pytest.approx(0.018020, rel=1e-3)


@pytest.mark.parametrize("c", [1.0, 2.0, 5.0, 10.0])
def test_juttner_normalization_n3(c):
    # J decays like exp(-c|p|) for |p| >> c, so the radius must grow as c shrinks
    R = 60.0 / c
    val = integrate.quad(lambda r: 4 * math.pi * r * r * juttner(np.array([r, 0, 0]), c), 0, R,
                         epsabs=0, epsrel=1e-12, limit=200)[0]
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("c", [1.0, 3.0])
def test_juttner_normalization_n2(c):
    val = integrate.quad(lambda r: 2 * math.pi * r * juttner(np.array([r, 0.0]), c), 0, 40,
                         epsabs=0, epsrel=1e-12, limit=200)[0]
    assert val == pytest.approx(1.0, abs=1e-8)
    assert juttner_normalization(c, 2) == pytest.approx(2 * math.pi * (1 + 1 / c ** 2))


def test_juttner_rejects_small_c():
    with pytest.raises(DomainError):
        juttner(np.zeros(3), 0.5)


def test_juttner_envelopes_single_constant():
    r = np.linspace(0, 15, 301)
    p = np.column_stack([r, np.zeros_like(r), np.zeros_like(r)])
    A = jsol_constant(3)
    for c in (1.0, 2.0, 5.0, 10.0):
        J = juttner(p, c)
        assert np.all(J >= np.exp(-r * r / 2) / A)
        assert np.all(J <= A * np.exp(-r))


def test_juttner_near_maxwellian():
    p = np.array([1.0, 0.0, 0.0])
    assert juttner(p, 100.0) == pytest.approx(maxwellian(p), rel=0.01)


def test_juttner_difference_rate():
    p = np.array([1.0, 0.0, 0.0])
    cs = 2.0 ** np.arange(2, 9)
    fit = rate_fit([(c, abs(juttner(p, c) - maxwellian(p))) for c in cs])
    assert 1.8 <= fit.slope <= 2.2


def test_maxwellian_values():
    assert maxwellian(np.zeros(3)) == pytest.approx(0.0634936, rel=1e-6)
    assert maxwellian(np.zeros(2)) == pytest.approx(0.1591549, rel=1e-6)
    p = np.array([0.3, -1.2, 2.0])
    assert maxwellian(p) == maxwellian(-p)
    val = integrate.quad(lambda r: 4 * math.pi * r * r * maxwellian(np.array([r, 0, 0])), 0, 15,
                         epsabs=0, epsrel=1e-12)[0]
    assert val == pytest.approx(1.0, abs=1e-8)


def test_weights():
    params = WeightParams(1.0, 1.0)
    p = np.array([0.4, -0.2, 1.0])
    assert weight_rel(np.zeros(3), p, 2.0, WeightParams(1.0, 0.5)) == pytest.approx(juttner(p, 2.0) ** 0.5)
    x = np.array([1.0, 0.0, 0.0])
    assert weight_rel(x, np.zeros(3), 1.0, params) == pytest.approx(math.exp(-1) * juttner(np.zeros(3), 1.0))
    assert weight_rel(x, np.zeros(3), 1.0, params) == pytest.approx(0.006629, abs=2e-6)
    with pytest.raises(DomainError):
        WeightParams(0.0, 1.0)


def test_weight_rate():
    x, p = np.array([0.5, 0.2, -0.1]), np.array([0.7, 0.0, 0.3])
    params = WeightParams()
    cs = 2.0 ** np.arange(2, 9)
    fit = rate_fit([(c, abs(weight_rel(x, p, c, params) - weight_newt(x, p, params))) for c in cs])
    assert 1.8 <= fit.slope <= 2.2


@pytest.mark.parametrize("frame", ["GS", "CM"])
def test_invariant_identity(frame, rng):
    p, q, om = random_events(5000, seed=41)
    x = rng.standard_normal((5000, 3))
    t = rng.uniform(0, 3, 5000)
    for c in (1.0, 2.0, 10.0):
        assert np.max(invariant_identity_residual(x, t, p, q, om, c, frame)) <= 1e-8
        assert np.max(invariant_identity_residual(x, np.zeros(5000), p, q, om, c, frame)) <= 1e-13


def test_chi_inequalities():
    r = np.linspace(0, 50, 201)
    assert np.all(chi1(r) >= 0)
    for c in np.linspace(1, 100, 25):
        assert np.all(chi2(c, r) <= chi2(1.0, r) + 1e-12)


def test_sharp_asymptotics():
    assert sharp_asymp_check(0.0, 4.0)
    assert sharp_asymp_ratio(0.0, 4.0) == pytest.approx(juttner(np.zeros(3), 4.0))
    A = sharp_asymp_constant(3)
    ratios = [sharp_asymp_ratio(math.sqrt(c), c) for c in (4, 16, 64, 256)]
    assert max(ratios) <= A
    with pytest.raises(DomainError):
        sharp_asymp_check(3.0, 4.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 1e4), st.floats(0.0, 1.0))
def test_taylor_remainder_bound(c, u):
    h = u * math.sqrt(c)
    assert taylor_remainder(h, c) <= 1 / 8 * (h * h / c) ** 2 * c * c / c ** 2 * (1 + 1e-12) + 1e-15
    assert taylor_remainder(h, c) <= 1 / 8
