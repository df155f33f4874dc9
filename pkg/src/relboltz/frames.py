"""Post-collision momenta in the four parameterisations.

Relativistic: the Glassey-Strauss map (``gs``) and the centre-of-momentum map
(``cm``).  Newtonian: the omega and sigma representations.  All maps broadcast
over leading axes of ``p``, ``q`` and ``omega``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError
from .kinematics import (
    _p0,
    check_momentum,
    check_speed,
    conservation_residual,
    dot,
    norm,
    relative_momentum,
)


class Frame(str, Enum):
    GS = "GS"
    CM = "CM"
    NEWTON_OMEGA = "NEWTON_OMEGA"
    NEWTON_SIGMA = "NEWTON_SIGMA"


def _check_unit(omega, tol=1e-12):
    omega = np.asarray(omega, dtype=float)
    if np.any(np.abs(norm(omega) - 1.0) > tol):
        raise DomainError("omega must be a unit vector")
    return omega


def _gs_parts(p, q, omega, c):
    p0, q0 = _p0(p, c), _p0(q, c)
    E = p0 + q0
    wP = dot(omega, p + q)
    den = E * E - wP * wP
    # p0 q0 omega.(q/q0 - p/p0) = omega.(p0 q - q0 p)
    a = 2.0 * E * dot(omega, p0[..., None] * q - q0[..., None] * p) / den
    n0 = 2.0 * wP * (p0 * dot(omega, q) - q0 * dot(omega, p)) / den
    return a, n0, den


def gs_post_collision(p, q, omega, c):
    """Glassey-Strauss outgoing momenta.

    Returns ``(p_out, q_out, a, N0)`` with ``p_out = p + a omega`` and the
    energy shift ``N0`` so that ``p0' = p0 + N0``, ``q0' = q0 - N0``.
    """
    p, q = check_momentum(p), check_momentum(q)
    omega = _check_unit(omega)
    c = check_speed(c)
    a, n0, den = _gs_parts(p, q, omega, c)
    if np.any(den <= 0.0):
        raise DomainError("non-positive Glassey-Strauss denominator")
    p_out = p + a[..., None] * omega
    q_out = q - a[..., None] * omega
    return p_out, q_out, a, n0


def _cm_map(p, q, omega, c):
    p0, q0 = _p0(p, c), _p0(q, c)
    E = p0 + q0
    P = p + q
    g = relative_momentum(p, q, c)
    rs = np.sqrt(g * g + 4.0 * c * c)
    # (gamma - 1)/|P|^2 = 1 / (sqrt(s) (E + sqrt(s))): regular at P = 0
    k = dot(P, omega) / (rs * (E + rs))
    d = 0.5 * g[..., None] * (omega + k[..., None] * P)
    return 0.5 * P + d, 0.5 * P - d


def cm_post_collision(p, q, omega, c):
    """Centre-of-momentum outgoing momenta ``(p_out, q_out)``."""
    p, q = check_momentum(p), check_momentum(q)
    omega = _check_unit(omega)
    c = check_speed(c)
    return _cm_map(p, q, omega, c)


def cm_energies(p, q, omega, c):
    """Closed-form CM outgoing energies ``(p0', q0')``."""
    p0, q0 = _p0(p, c), _p0(q, c)
    g = relative_momentum(p, q, c)
    rs = np.sqrt(g * g + 4.0 * c * c)
    a_c = g * dot(omega, p + q) / (2.0 * rs)
    half = 0.5 * (p0 + q0)
    return half + a_c, half - a_c


def newton_post_omega(p, q, omega):
    p, q = check_momentum(p), check_momentum(q)
    omega = _check_unit(omega)
    shift = dot(omega, q - p)[..., None] * omega
    return p + shift, q - shift


def newton_post_sigma(p, q, omega):
    p, q = check_momentum(p), check_momentum(q)
    omega = _check_unit(omega)
    mid = 0.5 * (p + q)
    d = 0.5 * norm(p - q)[..., None] * omega
    return mid + d, mid - d


def post_collision(p, q, omega, c, frame):
    """Dispatch to the map selected by ``frame``; returns ``(p_out, q_out)``."""
    frame = Frame(frame)
    if frame is Frame.GS:
        return gs_post_collision(p, q, omega, c)[:2]
    if frame is Frame.CM:
        return cm_post_collision(p, q, omega, c)
    if frame is Frame.NEWTON_OMEGA:
        return newton_post_omega(p, q, omega)
    return newton_post_sigma(p, q, omega)


@dataclass
class ScatteringEvent:
    """A binary collision with its outgoing momenta filled in by ``frame``."""

    p: np.ndarray
    q: np.ndarray
    omega: np.ndarray
    c: float
    frame: Frame
    p_out: np.ndarray = field(init=False)
    q_out: np.ndarray = field(init=False)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.omega = _check_unit(self.omega)
        self.frame = Frame(self.frame)
        if self.frame in (Frame.GS, Frame.CM) and np.isinf(self.c):
            raise DomainError("relativistic frames need a finite speed of light")
        self.p_out, self.q_out = post_collision(self.p, self.q, self.omega, self.c, self.frame)

    def residual(self):
        return conservation_residual(self.p, self.q, self.p_out, self.q_out, self.c)


def gs_jacobian(p, q, omega, c):
    """Closed-form Jacobian ``-p0' q0' / (p0 q0)`` of (p, q) -> (p', q') at fixed omega."""
    c = check_speed(c)
    p_out, q_out, _, _ = gs_post_collision(p, q, omega, c)
    return -_p0(p_out, c) * _p0(q_out, c) / (_p0(p, c) * _p0(q, c))


def finite_difference_jacobian(p, q, omega, c, rel_step=1e-5):
    """Determinant of the 2N x 2N derivative of the GS map by central differences.

    The step is ``rel_step * max(1, |p|, |q|)``.  Single event only.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    N = p.shape[-1]
    z = np.concatenate([p, q])
    h = rel_step * max(1.0, float(norm(p)), float(norm(q)))

    def F(v):
        po, qo, _, _ = gs_post_collision(v[:N], v[N:], omega, c)
        return np.concatenate([po, qo])

    jac = np.empty((2 * N, 2 * N))
    for k in range(2 * N):
        e = np.zeros(2 * N)
        e[k] = h
        jac[:, k] = (F(z + e) - F(z - e)) / (2.0 * h)
    return float(np.linalg.det(jac))


def cm_diff_from_newton(p, q, omega, c):
    """``|p_bar' - p'| + |q_bar' - q'|`` between the GS map and the omega representation."""
    po, qo, _, _ = gs_post_collision(p, q, omega, c)
    pn, qn = newton_post_omega(p, q, omega)
    return norm(po - pn) + norm(qo - qn)
