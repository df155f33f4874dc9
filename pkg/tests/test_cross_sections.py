import math

import numpy as np
import pytest

from relboltz.cross_sections import (CrossSection, CutoffParams, EnvelopeParams, Kind, c_star_search,
                                     cutoff_measure, energy_defect, envelope_check, evaluate, h_c, hard_ball,
                                     in_cutoff_set, load_b_table, crude_sufficient_c, sufficient_c)
from relboltz.errors import DomainError, SingularAngleError
from relboltz.frames import post_collision
from relboltz.kinematics import _p0
from relboltz.verify import CRUDE_BOUND_COUNTEREXAMPLE, crude_bound_counterexample

from conftest import random_events

E1, E2, E3 = np.eye(3)
ZERO = np.zeros(3)


def test_catalog_values():
    assert evaluate(hard_ball(), 3.0, 1.0, 2.0) == 1.0
    nu = CrossSection(Kind.NEUTRINO, {"G": 1.0, "hbar": 1.0})
    assert evaluate(nu, 2.0, 0.3, 1.0) == pytest.approx(4 / math.pi)
    assert evaluate(nu, 2.0, 0.3, 1.0) == pytest.approx(1.27324, abs=1e-5)
    isr = CrossSection(Kind.ISRAEL, {"b": 1.0})
    assert evaluate(isr, 2.0, 1.0, 1.0) == pytest.approx(0.05)


def test_moller_singular():
    m = CrossSection(Kind.MOLLER, {"r0": 1.0})
    with pytest.raises(SingularAngleError):
        evaluate(m, 1.0, 0.0, 1.0)
    with pytest.raises(SingularAngleError):
        evaluate(m, 1.0, math.pi, 1.0)


def test_compton_regular_at_zero_angle():
    comp = CrossSection(Kind.COMPTON, {"r0": 1.0})
    assert np.isfinite(evaluate(comp, 1.0, 0.0, 1.0))


def test_domain_checks():
    with pytest.raises(DomainError):
        evaluate(hard_ball(), -1.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        evaluate(hard_ball(), 1.0, 4.0, 1.0)
    with pytest.raises(DomainError):
        CrossSection(Kind.ISRAEL)


def test_catalog_nonnegative(rng):
    g = rng.uniform(0.01, 50, 2000)
    th = rng.uniform(0.01, math.pi - 0.01, 2000)
    for kind in Kind:
        sig = CrossSection(kind, {"b": 1.0})
        for c in (1.0, 3.0, 30.0):
            assert np.all(evaluate(sig, g, th, c) >= 0), kind


def test_b_table(tmp_path):
    path = tmp_path / "b.txt"
    np.savetxt(path, np.column_stack([[0, math.pi], [1.0, 3.0]]))
    sig = CrossSection(Kind.ISRAEL, b=load_b_table(path))
    assert evaluate(sig, 1.0, math.pi / 2, 1e6) == pytest.approx(2.0 / 2.0, rel=1e-9)
    bad = tmp_path / "bad.txt"
    np.savetxt(bad, np.column_stack([[1.0, 0.0], [1.0, 3.0]]))
    with pytest.raises(DomainError):
        load_b_table(bad)


def test_envelope_checks(rng):
    g = rng.uniform(0, 1e3, 500)
    th = rng.uniform(0.1, 3.0, 500)
    sample = np.column_stack([g, th, np.ones_like(g)])
    assert envelope_check(hard_ball(), EnvelopeParams(A1=1.0, sigma_tilde=1.0), sample).worst_ratio <= 1.0
    nu = CrossSection(Kind.NEUTRINO, {"G": 1.0, "hbar": 1.0})
    assert not envelope_check(nu, EnvelopeParams(A1=100.0, alpha1=1.0), sample).passed
    sigma1 = 2.0
    isr = CrossSection(Kind.ISRAEL, {"b": sigma1})
    sample[:, 0] = rng.uniform(1e-3, 1e3, 500)
    env = EnvelopeParams(A1=0.0, A2=sigma1 / 2, gamma=1.0)
    assert envelope_check(isr, env, sample).passed


def test_envelope_gamma_range():
    with pytest.raises(DomainError):
        EnvelopeParams(gamma=3.0, N=3)
    EnvelopeParams(gamma=2.9, N=3)


def test_h_c_values():
    p, q = np.array([0.3, 1.0, 0.0]), np.array([-2.0, 0.5, 1.0])
    x = np.array([1.0, -1.0, 0.5])
    assert h_c(x, p, q, 1.0, 2.0, CutoffParams(B=1.0, a=0.0)) == pytest.approx(1.0)
    assert h_c(x, p, q, 2.0, 2.0, CutoffParams(B=1.0, a=0.0)) == pytest.approx(0.25)
    assert h_c(ZERO, p, p, 1.0, 2.0, CutoffParams(B=1.5)) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        h_c(x, p, q, 0.0, 2.0, CutoffParams())


@pytest.mark.parametrize("frame", ["GS", "CM"])
def test_energy_defect_direct(frame):
    p, q, om = random_events(2000, seed=31, scale=1.0)
    c = 1.5
    po, qo = post_collision(p, q, om, c, frame)
    direct = c ** 3 * (1 / _p0(p, c) + 1 / _p0(q, c) - 1 / _p0(po, c) - 1 / _p0(qo, c))
    np.testing.assert_allclose(energy_defect(p, q, om, c, frame), direct, rtol=1e-8, atol=1e-10)


def test_cutoff_membership_trivial_and_closed_form():
    p = np.array([0.5, 0.5, 0.0])
    assert in_cutoff_set(E3, ZERO, p, p, 1.0, 1.0, CutoffParams())
    p, q = np.array([2.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    om = np.array([1.0, -2.0, 0.0]) / math.sqrt(5)  # orthogonal to p + q
    c, t, par = 1.0, 1.0, CutoffParams(B=0.01, a=0.0)
    p0, q0 = _p0(p, c), _p0(q, c)
    h = float(h_c(ZERO, p, q, t, c, par))
    expected = 1 / p0 + 1 / q0 - 4 / (p0 + q0) + h / c ** 3 >= 0
    assert bool(in_cutoff_set(om, ZERO, p, q, t, c, par)) == expected


def test_cutoff_membership_reflection_symmetry():
    p, q, om = random_events(2000, seed=32)
    x = np.ones(3)
    a = in_cutoff_set(om, x, p, q, 1.0, 2.0, CutoffParams())
    b = in_cutoff_set(-om, x, p, q, 1.0, 2.0, CutoffParams())
    # omega -> -omega swaps the outgoing energies, leaving the defect unchanged
    np.testing.assert_array_equal(a, b)


def test_cutoff_measure_basics():
    p = np.array([1.0, 0.0, 0.0])
    assert cutoff_measure(ZERO, p, p, 1.0, 1.0, CutoffParams()) == 1.0
    with pytest.raises(DomainError):
        cutoff_measure(ZERO, p, p, 1.0, 1.0, CutoffParams(), n_samples=10)


def test_c_star_trivial_and_bounded():
    p = np.array([0.3, 0.2, 0.1])
    rep = c_star_search(p, p, 1.0, CutoffParams(), n_omega=2000)
    assert rep.found and rep.c_star == 2.0 ** -6
    rep = c_star_search(E1, E2, 1.0, CutoffParams(B=1.0), n_omega=5000)
    assert rep.found and rep.c_star <= rep.analytic_bound
    assert crude_sufficient_c(E1, E2, 1.0, 1.0) == pytest.approx(0.5)


def test_measure_full_beyond_c_star():
    p, q = np.array([1.0, 2.0, -1.0]), np.array([-2.0, 0.5, 1.5])
    par = CutoffParams(B=0.5)
    rep = c_star_search(p, q, 2.0, par, n_omega=5000)
    assert rep.found
    for t in (0.5, 1.0, 2.0):
        assert cutoff_measure(ZERO, p, q, t, 1.01 * rep.c_star, par, n_samples=5000, seed=3) == 1.0


def test_crude_bound_counterexample():
    ce = CRUDE_BOUND_COUNTEREXAMPLE
    crude = crude_sufficient_c(ce["p"], ce["q"], ce["T"], ce["B"])
    assert crude == pytest.approx(4.566, abs=2e-3)
    assert crude_bound_counterexample(n_samples=20_000) < 1.0
    assert sufficient_c(ce["p"], ce["q"], ce["T"], ce["B"]) > crude
