"""Collision kernels and quadrature of the gain/loss integrals in momentum space."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_legendre

from .cross_sections import CrossSection, evaluate
from .errors import DomainError
from .frames import Frame, _cm_map, _gs_parts, newton_post_omega
from .kinematics import _p0, cos_scattering_angle, dot, norm, relative_momentum


# ------------------------------------------------------------------- kernels


def _sigma(sigma: CrossSection, g, cos_t, c):
    """sigma(g, theta) with the integrand convention 0 at g = 0."""
    g = np.asarray(g, dtype=float)
    if sigma.angle_free:
        theta = np.zeros_like(g)
    else:
        theta = np.arccos(np.clip(np.nan_to_num(cos_t, nan=1.0), -1.0, 1.0))
    pos = g > 0
    if sigma.angle_free or np.all(pos):
        out = evaluate(sigma, g, theta, c)
    else:
        out = np.zeros(np.broadcast(g, theta).shape)
        gb, tb = np.broadcast_arrays(g, theta)
        out[pos] = evaluate(sigma, gb[pos], tb[pos], c)
    return np.where(pos, out, 0.0)


def gs_kernel_factor(p, q, omega, c):
    """``s c E^2 |omega.(p/p0 - q/q0)| / den^2``; the GS kernel is this times sigma."""
    p0, q0 = _p0(p, c), _p0(q, c)
    E = p0 + q0
    wP = dot(omega, p + q)
    den = E * E - wP * wP
    g = relative_momentum(p, q, c)
    s = g * g + 4.0 * c * c
    return s * c * E * E * np.abs(dot(omega, p0[..., None] * q - q0[..., None] * p)) / (p0 * q0 * den * den)


def kernel_gs(p, q, omega, c, sigma: CrossSection):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(np.abs(norm(omega) - 1.0) > 1e-12):
        raise DomainError("omega must be a unit vector")
    a, _, den = _gs_parts(p, q, omega, c)
    if np.any(den <= 0):
        raise DomainError("non-positive Glassey-Strauss denominator")
    cos_t = None
    if not sigma.angle_free:
        po = p + a[..., None] * omega
        qo = q - a[..., None] * omega
        cos_t = cos_scattering_angle(p, q, po, qo, c)
    g = relative_momentum(p, q, c)
    return gs_kernel_factor(p, q, omega, c) * _sigma(sigma, g, cos_t, c)


def kernel_cm(p, q, omega, c, sigma: CrossSection):
    """Moller velocity times sigma, angle taken from the CM outgoing pair."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    g = relative_momentum(p, q, c)
    s = g * g + 4.0 * c * c
    vc = 0.25 * c * g * np.sqrt(s) / (_p0(p, c) * _p0(q, c))
    cos_t = None
    if not sigma.angle_free:
        po, qo = _cm_map(p, q, np.asarray(omega, dtype=float), c)
        cos_t = cos_scattering_angle(p, q, po, qo, c)
    return vc * _sigma(sigma, g, cos_t, c)


def kernel_newt(p, q, omega, sigma_inf: CrossSection):
    """``|omega.(p - q)| sigma_inf(|p - q|, theta)``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    d = p - q
    g = norm(d)
    cos_t = None
    if not sigma_inf.angle_free:
        po, qo = newton_post_omega(p, q, omega)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_t = dot(d, po - qo) / (g * g)
    return np.abs(dot(omega, d)) * _sigma(sigma_inf, g, cos_t, np.inf)


def collision_terms_pointwise(p, q, omega, c, sigma, rep):
    """Kernel and outgoing momenta for representation ``rep`` (broadcasting)."""
    rep = Frame(rep)
    if rep is Frame.GS:
        a, _, _ = _gs_parts(p, q, omega, c)
        po = p + a[..., None] * omega
        qo = q - a[..., None] * omega
        if sigma.angle_free:
            K = gs_kernel_factor(p, q, omega, c) * _sigma(sigma, relative_momentum(p, q, c), None, c)
        else:
            K = kernel_gs(p, q, omega, c, sigma)
        return K, po, qo
    if rep is Frame.CM:
        po, qo = _cm_map(p, q, omega, c)
        return kernel_cm(p, q, omega, c, sigma), po, qo
    if rep is Frame.NEWTON_OMEGA:
        po, qo = newton_post_omega(p, q, omega)
        return kernel_newt(p, q, omega, sigma), po, qo
    raise DomainError("collision operator supports GS, CM and NEWTON_OMEGA")


# --------------------------------------------------------------- quadrature


@dataclass
class MomentumFunction:
    """A density in momentum space; ``support_radius`` (if known) bounds where it is nonzero."""

    fn: Callable
    support_radius: Optional[float] = None

    def __call__(self, p):
        return self.fn(np.asarray(p, dtype=float))


def taper(r, R: float, width: float):
    """C^1 cosine roll-off from 1 at ``R - width`` to 0 at ``R``."""
    r = np.asarray(r, dtype=float)
    u = np.clip((r - (R - width)) / width, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * u))


def truncated_juttner(c, N=2, R=2.5, width=1.0) -> MomentumFunction:
    from .distributions import juttner, maxwellian

    def fn(p):
        base = maxwellian(p) if np.isinf(c) else juttner(p, c)
        return base * taper(norm(p), R, width)

    return MomentumFunction(fn, R)


def gaussian_bump(center, scale=0.7, R=2.2, width=1.0) -> MomentumFunction:
    center = np.asarray(center, dtype=float)

    def fn(p):
        d = p - center
        return np.exp(-0.5 * dot(d, d) / scale**2) * taper(norm(d), R, width)

    return MomentumFunction(fn, R + float(norm(center)))


@dataclass(frozen=True)
class QuadratureSpec:
    N: int = 2
    q_extent: float = 6.0
    n_q: int = 24
    n_omega: int = 32
    n_theta: int = 16
    n_phi: int = 16
    mc_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.N not in (2, 3):
            raise DomainError("N must be 2 or 3")
        if min(self.n_q, self.n_omega, self.n_theta, self.n_phi) < 2 or self.q_extent <= 0:
            raise DomainError("quadrature counts must be >= 2 and extent > 0")

    def axis(self) -> np.ndarray:
        h = 2.0 * self.q_extent / self.n_q
        return -self.q_extent + h * (np.arange(self.n_q) + 0.5)

    def q_nodes(self):
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.N), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return pts, (ax[1] - ax[0]) ** self.N

    def omega_nodes(self):
        return omega_nodes(self.N, self.n_omega, self.n_theta, self.n_phi, self.mc_samples, self.seed)

    def refined(self) -> "QuadratureSpec":
        return replace(self, n_q=2 * self.n_q, n_omega=2 * self.n_omega,
                       n_theta=2 * self.n_theta, n_phi=2 * self.n_phi,
                       mc_samples=4 * self.mc_samples)


def omega_nodes(N, n_omega=32, n_theta=16, n_phi=16, mc_samples=0, seed=0):
    """Sphere nodes and weights summing to ``|S^{N-1}|``."""
    area = 2.0 * np.pi if N == 2 else 4.0 * np.pi
    if mc_samples:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal((mc_samples, N))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v, np.full(mc_samples, area / mc_samples)
    if N == 2:
        ang = 2.0 * np.pi * np.arange(n_omega) / n_omega
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1), np.full(n_omega, area / n_omega)
    x, w = roots_legendre(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - x * x)
    om = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                   np.outer(x, np.ones(n_phi))], axis=-1).reshape(-1, 3)
    wt = np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return om, wt


def _gain_radius(rf, rh, c):
    if rf is None or rh is None:
        return None
    if np.isinf(c):
        return float(np.sqrt(rf * rf + rh * rh))
    emax = np.sqrt(c * c + rf * rf) + np.sqrt(c * c + rh * rh) - c
    return float(np.sqrt(max(emax * emax - c * c, 0.0)))


def collision_integrals(f: MomentumFunction, h: MomentumFunction, p_points, c, sigma: CrossSection,
                        rep, quad: QuadratureSpec, chunk_elems: int = 400_000):
    """Gain and loss integrals at each row of ``p_points``.

    Returns ``(gain, loss)`` arrays.  For ``rep = NEWTON_OMEGA`` pass ``c = inf``.
    """
    rep = Frame(rep)
    if rep is Frame.NEWTON_OMEGA:
        c = np.inf
    P = np.atleast_2d(np.asarray(p_points, dtype=float))
    qn, dq = quad.q_nodes()
    om, ow = quad.omega_nodes()
    rq = _gain_radius(f.support_radius, h.support_radius, c)
    if rq is not None:
        qn = qn[norm(qn) <= rq + 1e-12]
    gain = np.zeros(len(P))
    loss = np.zeros(len(P))
    if len(qn) == 0:
        return gain, loss
    hq = h(qn)
    fp = f(P)
    per_p = len(qn) * len(om)
    step = max(1, chunk_elems // per_p)
    for s in range(0, len(P), step):
        pp = P[s:s + step][:, None, None, :]
        K, po, qo = collision_terms_pointwise(pp, qn[None, :, None, :], om[None, None, :, :],
                                              c, sigma, rep)
        Kw = K * ow
        gain[s:s + step] = np.einsum("pqk,pqk->p", Kw, f(po) * h(qo)) * dq
        loss[s:s + step] = fp[s:s + step] * np.einsum("pqk,q->p", Kw, hq) * dq
    return gain, loss


def q_gain(f, h, p, c, sigma, rep, quad: QuadratureSpec):
    g, _ = collision_integrals(f, h, p, c, sigma, rep, quad)
    return g if np.ndim(p) > 1 else float(g[0])


def q_loss(f, h, p, c, sigma, rep, quad: QuadratureSpec):
    _, l_ = collision_integrals(f, h, p, c, sigma, rep, quad)
    return l_ if np.ndim(p) > 1 else float(l_[0])


def refinement_error(f, h, p, c, sigma, rep, quad: QuadratureSpec):
    """``(gain - loss)`` on ``quad`` and its difference from the refined quadrature."""
    g0, l0 = collision_integrals(f, h, p, c, sigma, rep, quad)
    g1, l1 = collision_integrals(f, h, p, c, sigma, rep, quad.refined())
    return g1 - l1, np.abs((g1 - l1) - (g0 - l0))


@dataclass(frozen=True)
class MomentResiduals:
    mass: float
    momentum: float
    energy: float

    def max(self) -> float:
        return max(self.mass, self.momentum, self.energy)


ROUNDOFF_FLOOR = 1e-12


def moment_conservation(f: MomentumFunction, c, sigma: CrossSection, rep, quad: QuadratureSpec) -> MomentResiduals:
    """Scaled moments ``|int Q(f,f) phi| / int (Q+ + Q-) |phi|`` for phi = 1, p_i, p0.

    The p-grid is the quadrature's q-grid.  For the Newtonian representation the
    energy moment uses ``|p|^2 / 2``.
    """
    rep = Frame(rep)
    if rep is Frame.NEWTON_OMEGA:
        c = np.inf
    pts, dp = quad.q_nodes()
    rq = _gain_radius(f.support_radius, f.support_radius, c)
    if rq is not None:
        pts = pts[norm(pts) <= rq + 1e-12]
    gain, loss = collision_integrals(f, f, pts, c, sigma, rep, quad)
    Q = gain - loss
    A = gain + loss

    def resid(phi):
        den = np.sum(A * np.abs(phi)) * dp
        if den == 0:
            return 0.0
        return float(abs(np.sum(Q * phi)) * dp / den)

    energy_phi = 0.5 * dot(pts, pts) if np.isinf(c) else _p0(pts, c)
    mom = max(resid(pts[:, i]) for i in range(pts.shape[1]))
    return MomentResiduals(resid(np.ones(len(pts))), mom, resid(energy_phi))


def moment_refinement(f, c, sigma, rep, quad: QuadratureSpec):
    """Residuals at ``quad`` and its refinement, plus the per-moment halving verdict."""
    coarse = moment_conservation(f, c, sigma, rep, quad)
    fine = moment_conservation(f, c, sigma, rep, quad.refined())
    halved = all(fv <= 0.5 * cv or fv <= ROUNDOFF_FLOOR
                 for cv, fv in zip((coarse.mass, coarse.momentum, coarse.energy),
                                   (fine.mass, fine.momentum, fine.energy)))
    return coarse, fine, halved
