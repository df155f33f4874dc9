import math

import numpy as np
import pytest

from relboltz.cross_sections import hard_ball
from relboltz.distributions import maxwellian
from relboltz.errors import DomainError
from relboltz.limit_harness import (Component, SampleSpec, component_sweep, l1p_linfx_norm, rate_fit, read_summary,
                                    solution_convergence_study, translation_constant, translation_modulus,
                                    write_study_csv, write_sweep_csv)
from relboltz.solver import FieldGrid, SolveConfig, default_initial_data

C_LIST = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]


def grid(n_x=8, n_p=16, L_x=2.0, L_p=6.0):
    return FieldGrid(L_x=L_x, n_x=n_x, L_p=L_p, n_p=n_p)


def test_norm_zero_and_separable(rng):
    g = grid()
    assert l1p_linfx_norm(g.with_values(np.zeros(g.shape))) == 0.0
    gp = rng.standard_normal((g.n_p, g.n_p))
    f = np.broadcast_to(gp, g.shape)
    assert l1p_linfx_norm(g.with_values(f)) == pytest.approx(g.dp ** 2 * np.sum(np.abs(gp)))


def test_norm_of_maxwellian():
    g = grid(n_p=48, L_p=8.0)
    mu = maxwellian(g.p_points()).reshape(g.n_p, g.n_p)
    assert l1p_linfx_norm(g.with_values(np.broadcast_to(mu, g.shape))) == pytest.approx(1.0, abs=1e-6)


def test_norm_homogeneity_and_triangle(rng):
    g = grid()
    for _ in range(10):
        a, b = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
        na, nb = l1p_linfx_norm(g.with_values(a)), l1p_linfx_norm(g.with_values(b))
        assert l1p_linfx_norm(g.with_values(-3 * a)) == pytest.approx(3 * na)
        assert l1p_linfx_norm(g.with_values(a + b)) <= na + nb + 1e-12


def gaussian_field(n=32):
    g = grid(n_x=n, n_p=16, L_x=3.0)
    x = g.x_points()
    p = g.p_points()
    v = np.exp(-np.sum(x * x, 1))[:, None] * maxwellian(p)[None]
    return g.with_values(v.reshape(g.shape))


def test_translation_modulus():
    f = gaussian_field()
    assert translation_modulus(f, np.zeros(2)) == 0.0
    assert translation_modulus(f, np.zeros(2), "p") == 0.0
    with pytest.raises(DomainError):
        translation_modulus(f, np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        translation_modulus(f, np.zeros(3))


def test_translation_lipschitz_plateau():
    f = gaussian_field(64)
    A3, ratios = translation_constant(f, hs=(2e-2, 1e-2, 5e-3))
    assert max(ratios) / min(ratios) < 1.2
    assert translation_modulus(f, np.array([0.01, 0.0])) <= A3 * 0.01 * (1 + 1e-12)


def test_default_data_translation_constant():
    f0 = default_initial_data(SolveConfig(c=2.0, b=1.0, n_x=24, n_p=12))
    A3, _ = translation_constant(f0)
    for h in (0.1, 0.05, 0.02):
        assert translation_modulus(f0, np.array([h, 0.0])) <= 1.5 * A3 * h


def test_rate_fit_exact():
    fit = rate_fit([(c, 3.0 / c ** 2) for c in C_LIST])
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.r2 == pytest.approx(1.0)
    assert rate_fit([(c, 3.0 / c) for c in C_LIST]).slope == pytest.approx(1.0, abs=1e-12)


def test_rate_fit_noise(rng):
    for _ in range(20):
        noise = 1 + 0.05 * rng.uniform(-1, 1, len(C_LIST))
        fit = rate_fit([(c, n / c ** 2) for c, n in zip(C_LIST, noise)])
        assert 1.85 <= fit.slope <= 2.15


def test_rate_fit_drops_and_rejects():
    with pytest.warns(RuntimeWarning):
        fit = rate_fit([(2, 0.25), (4, 0.0), (8, 1 / 64), (16, 1 / 256)])
    assert len(fit.pairs) == 3
    with pytest.raises(DomainError):
        with pytest.warns(RuntimeWarning):
            rate_fit([(2, 1.0), (4, -1.0), (8, 0.1)])


def test_phat_sweep():
    res = component_sweep(Component.PHAT_DIFF, C_LIST, SampleSpec(p_fixed=(1.0, 0.0, 0.0)))
    assert 1.95 <= res.fit.slope <= 2.05
    for c, v in zip(C_LIST, res.values):
        assert v == pytest.approx(1 - (1 + 1 / c ** 2) ** -0.5, rel=1e-6)


@pytest.mark.parametrize("kind", ["POST_COLLISION_DIFF", "KERNEL_DIFF"])
def test_sample_sweeps(kind):
    res = component_sweep(kind, C_LIST, SampleSpec(n=1000))
    assert 1.9 <= res.fit.slope <= 2.1


def test_juttner_sweep():
    res = component_sweep("JUTTNER_DIFF", C_LIST)
    assert 1.8 <= res.fit.slope <= 2.2


def test_cutoff_sweep_reaches_one():
    spec = SampleSpec(p_fixed=(1.0, 0.5, 0.0), q_fixed=(-0.5, 0.2, 1.0), x=(0.3, 0.0, 0.1))
    res = component_sweep("CUTOFF_MEASURE", C_LIST, spec)
    assert res.fit is None and res.values[-1] == 1.0


def test_sweep_requires_dyadic():
    with pytest.raises(DomainError):
        component_sweep("PHAT_DIFF", [4, 8, 16])
    with pytest.raises(DomainError):
        component_sweep("PHAT_DIFF", [4, 8, 12, 16])


def test_transport_only_study():
    base = SolveConfig(sigma=hard_ball(0.0), n_x=16, n_p=12, n_t=1, L_x=3.0, L_p=4.0)
    f0 = default_initial_data(SolveConfig(c=math.inf, n_x=16, n_p=12, n_t=1, L_x=3.0, L_p=4.0))
    study = solution_convergence_study(base, [4.0, 8.0, 16.0, 32.0], f0=f0, f0_newton=f0)
    assert all(p.data_error < 1e-15 for p in study.points)
    assert 1.8 <= study.fit.slope <= 2.2


def test_study_time_zero_is_data_difference():
    base = SolveConfig(sigma=hard_ball(0.0), n_x=8, n_p=8, n_t=1)
    study = solution_convergence_study(base, [2.0, 4.0, 8.0])
    fn = default_initial_data(SolveConfig(c=math.inf, n_x=8, n_p=8))
    for p in study.points:
        fc = default_initial_data(SolveConfig(c=p.c, n_x=8, n_p=8))
        assert p.data_error == pytest.approx(l1p_linfx_norm(fc.with_values(fc.values - fn.values)), rel=1e-12)


def test_csv_roundtrip(tmp_path):
    fit = rate_fit([(c, 1 / c ** 2) for c in C_LIST])
    path = tmp_path / "s.csv"
    write_study_csv(path, [(c, 1 / c ** 2, 0.0, True) for c in C_LIST], fit)
    lines = path.read_text().splitlines()
    assert lines[0] == "c,error,trunc_floor,included"
    assert lines[1].startswith("4.000000000000e+00,")
    s = read_summary(path)
    assert s["slope"] == pytest.approx(2.0) and s["r2"] == pytest.approx(1.0)
    res = component_sweep("PHAT_DIFF", C_LIST)
    write_sweep_csv(tmp_path / "p.csv", res)
    assert read_summary(tmp_path / "p.csv")["slope"] == pytest.approx(res.fit.slope, rel=1e-11)
