import numpy as np
import pytest
from hypothesis import given, settings

from relboltz.errors import DomainError
from relboltz.frames import (Frame, ScatteringEvent, cm_diff_from_newton, cm_energies, cm_post_collision,
                             finite_difference_jacobian, gs_jacobian, gs_post_collision, newton_post_omega,
                             newton_post_sigma, post_collision)
from relboltz.kinematics import _p0, conservation_residual, invariants
from relboltz.limit_harness import rate_fit

from conftest import random_events, speeds, unit3, vec3

E1, E2 = np.eye(3)[0], np.eye(3)[1]
ZERO = np.zeros(3)


def test_gs_a_vanishes_for_orthogonal_omega():
    po, qo, a, _ = gs_post_collision(E1, -E1, E2, 1.0)
    assert a == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(po, E1, atol=1e-15)
    np.testing.assert_allclose(qo, -E1, atol=1e-15)


def test_gs_exchange():
    po, qo, a, _ = gs_post_collision(E1, ZERO, E1, 1.0)
    assert a == pytest.approx(-1.0)
    np.testing.assert_allclose(po, ZERO, atol=1e-15)
    np.testing.assert_allclose(qo, E1, atol=1e-15)


def test_gs_rejects_non_unit_omega():
    with pytest.raises(DomainError):
        gs_post_collision(E1, ZERO, 2 * E1, 1.0)


def test_cm_values():
    po, qo = cm_post_collision(E1, -E1, E2, 1.0)
    np.testing.assert_allclose(po, E2, atol=1e-15)
    np.testing.assert_allclose(qo, -E2, atol=1e-15)
    po, qo = cm_post_collision(E1, -E1, E1, 1.0)
    np.testing.assert_allclose(po, E1, atol=1e-15)
    np.testing.assert_allclose(qo, -E1, atol=1e-15)


def test_coincident_momenta_fixed():
    p = np.array([0.4, -1.0, 2.0])
    for frame in ("GS", "CM"):
        po, qo = post_collision(p, p, E2, 3.0, frame)
        np.testing.assert_allclose(po, p, atol=1e-14)
        np.testing.assert_allclose(qo, p, atol=1e-14)


def test_newton_maps():
    po, qo = newton_post_omega(E1, ZERO, E1)
    np.testing.assert_allclose(po, ZERO)
    np.testing.assert_allclose(qo, E1)
    po, qo = newton_post_omega(E1, ZERO, E2)
    np.testing.assert_allclose(po, E1)
    po, qo = newton_post_sigma(E1, -E1, E2)
    np.testing.assert_allclose(po, E2)
    np.testing.assert_allclose(qo, -E2)
    po, qo = newton_post_sigma(E1, -E1, E1)
    np.testing.assert_allclose(po, E1)


@pytest.mark.parametrize("frame", ["GS", "CM"])
@pytest.mark.parametrize("c", [1.0, 2.0, 10.0, 100.0])
def test_relativistic_conservation_and_invariance(frame, c):
    p, q, om = random_events(20_000, seed=11)
    po, qo = post_collision(p, q, om, c, frame)
    assert np.max(conservation_residual(p, q, po, qo, c)) <= 1e-10
    i0, i1 = invariants(p, q, c), invariants(po, qo, c)
    np.testing.assert_allclose(i1.s, i0.s, rtol=1e-9)
    np.testing.assert_allclose(i1.g, i0.g, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("frame", ["NEWTON_OMEGA", "NEWTON_SIGMA"])
def test_newtonian_conservation(frame):
    p, q, om = random_events(20_000, seed=12)
    po, qo = post_collision(p, q, om, np.inf, frame)
    assert np.max(conservation_residual(p, q, po, qo, np.inf)) <= 1e-12


def test_newtonian_second_order_symmetry(rng):
    p, q, om = random_events(10_000, seed=13)
    x = rng.standard_normal((10_000, 3))
    t = rng.uniform(0, 3, (10_000, 1))
    po, qo = newton_post_omega(p, q, om)
    lhs = np.sum((x + t * po) ** 2, 1) + np.sum((x + t * qo) ** 2, 1)
    rhs = np.sum((x + t * p) ** 2, 1) + np.sum((x + t * q) ** 2, 1)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


def test_lower_bound_outgoing_energies():
    for c in (1.0, 2.0, 10.0, 100.0):
        p, q, om = random_events(100_000, seed=14)
        a, b = cm_energies(p, q, om, c)
        assert np.all(2 * a * b >= c * _p0(p, c) * (1 - 1e-12))


def test_cm_energies_match_map():
    p, q, om = random_events(5000, seed=15)
    po, qo = cm_post_collision(p, q, om, 2.0)
    a, b = cm_energies(p, q, om, 2.0)
    np.testing.assert_allclose(a, _p0(po, 2.0), rtol=1e-12)
    np.testing.assert_allclose(b, _p0(qo, 2.0), rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(vec3, vec3, unit3(), speeds)
def test_cm_invariance_property(p, q, om, c):
    po, qo = cm_post_collision(p, q, om, c)
    assert conservation_residual(p, q, po, qo, c) <= 1e-10


def test_gs_jacobian_values():
    assert gs_jacobian(E1, -E1, E2, 1.0) == pytest.approx(-1.0)
    assert gs_jacobian(E1, ZERO, E1, 1.0) == pytest.approx(-1.0)


def test_gs_jacobian_vs_finite_differences():
    p, q, om = random_events(100, seed=16, scale=1.5)
    for i in range(100):
        closed = gs_jacobian(p[i], q[i], om[i], 1.5)
        fd = finite_difference_jacobian(p[i], q[i], om[i], 1.5)
        assert abs(abs(closed) - abs(fd)) <= 1e-5 * abs(closed)


def test_cm_diff_from_newton_rate():
    p, q, om = random_events(200, seed=17, scale=0.5)
    assert np.all(cm_diff_from_newton(p, p, om, 4.0) < 1e-12)
    cs = 2.0 ** np.arange(2, 9)
    errs = [np.max(cm_diff_from_newton(p, q, om, c)) for c in cs]
    assert 1.9 <= rate_fit(zip(cs, errs)).slope <= 2.1


def test_scattering_event_rejects_infinite_c():
    with pytest.raises(DomainError):
        ScatteringEvent(E1, ZERO, E2, np.inf, Frame.GS)
