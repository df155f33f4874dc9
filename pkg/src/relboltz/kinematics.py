"""Single- and two-particle relativistic kinematics.

Momenta are arrays whose last axis holds the N spatial components (units of
mc, mass normalised to one).  Every function broadcasts over leading axes so
that large random samples can be processed in one call.  The metric signature
is (-, +, ..., +): ``p^mu q_mu = -p0 q0 + p.q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateCollisionError, DomainError

#: Default lower bound on the speed of light accepted by public functions.
C_MIN = 1.0

#: Largest tolerated overshoot of |cos(theta)| above one before clamping.
COS_OVERSHOOT_TOL = 1e-9


def check_speed(c, c_min: float = C_MIN) -> float:
    c = float(c)
    if not np.isfinite(c) or c <= 0.0:
        raise DomainError(f"speed of light must be finite and positive, got {c}")
    if c < c_min:
        raise DomainError(f"speed of light c={c} below configured minimum {c_min}")
    return c


def check_momentum(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim == 0 or p.shape[-1] not in (2, 3):
        raise DomainError(f"momentum must have 2 or 3 components, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DomainError("momentum has non-finite components")
    return p


def dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def norm(a):
    return np.sqrt(dot(a, a))


def cross_norm(p, q):
    """|p x q|; for N=2 the absolute value of the scalar determinant."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] == 2:
        return np.abs(p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0])
    return norm(np.cross(p, q))


def _p0(p, c):
    # unchecked on-shell energy, used on hot paths
    return np.sqrt(c * c + dot(p, p))


def energy(p, c, c_min: float = C_MIN):
    """On-shell energy ``p0 = sqrt(c^2 + |p|^2)``."""
    c = check_speed(c, c_min)
    p = check_momentum(p)
    return _p0(p, c)


@dataclass(frozen=True)
class FourMomentum:
    """On-shell four-momentum ``(p0, p)`` at speed of light ``c``."""

    p0: float
    spatial: np.ndarray
    c: float

    @classmethod
    def on_shell(cls, p, c) -> "FourMomentum":
        p = check_momentum(p)
        return cls(p0=float(energy(p, c)), spatial=p, c=float(c))

    @property
    def N(self) -> int:
        return self.spatial.shape[-1]

    def __post_init__(self):
        expected = np.sqrt(self.c ** 2 + float(dot(self.spatial, self.spatial)))
        if self.p0 <= 0 or abs(self.p0 - expected) > 1e-12 * expected:
            raise DomainError("four-momentum is not on the mass shell")


def lorentz_inner(P: FourMomentum, Q: FourMomentum) -> float:
    """Minkowski product ``-p0 q0 + p.q``."""
    if P.N != Q.N or P.c != Q.c:
        raise DomainError("four-momenta must share dimension and speed of light")
    return -P.p0 * Q.p0 + float(dot(P.spatial, Q.spatial))


def minkowski_inner(p, q, c):
    """Vectorised ``p^mu q_mu`` for on-shell spatial momenta."""
    return -_p0(p, c) * _p0(q, c) + dot(p, q)


@dataclass(frozen=True)
class CollisionInvariants:
    s: np.ndarray
    g: np.ndarray
    theta: Optional[np.ndarray] = None


def relative_momentum(p, q, c):
    """g via the difference-of-squares form, free of cancellation for |p|,|q| << c."""
    p0, q0 = _p0(p, c), _p0(q, c)
    num = c * c * dot(p - q, p - q) + cross_norm(p, q) ** 2
    return np.sqrt(2.0 * num / (p0 * q0 + dot(p, q) + c * c))


def relative_momentum_naive(p, q, c):
    """g from ``sqrt(2(-p^mu q_mu - c^2))``; loses accuracy when |p|,|q| << c."""
    return np.sqrt(np.maximum(2.0 * (-minkowski_inner(p, q, c) - c * c), 0.0))


def invariants(p, q, c) -> CollisionInvariants:
    c = check_speed(c)
    p, q = check_momentum(p), check_momentum(q)
    g = relative_momentum(p, q, c)
    return CollisionInvariants(s=g * g + 4.0 * c * c, g=g)


def _energy_difference(p, q, c):
    # p0 - q0 without cancellation
    return (dot(p, p) - dot(q, q)) / (_p0(p, c) + _p0(q, c))


def cos_scattering_angle(p, q, p_out, q_out, c):
    """Unclamped ``(p-q)^mu (p'-q')_mu / g^2``."""
    g = relative_momentum(p, q, c)
    num = -_energy_difference(p, q, c) * _energy_difference(p_out, q_out, c) + dot(p - q, p_out - q_out)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / (g * g)


def scattering_angle(p, q, p_out, q_out, c):
    """Centre-of-momentum scattering angle in [0, pi]."""
    c = check_speed(c)
    g = relative_momentum(p, q, c)
    if np.any(g == 0.0):
        raise DegenerateCollisionError("scattering angle undefined for g = 0")
    cos_t = cos_scattering_angle(p, q, p_out, q_out, c)
    over = np.abs(cos_t) - 1.0
    if np.any(over > COS_OVERSHOOT_TOL):
        raise DomainError(f"|cos theta| exceeds one by {np.max(over):.3e}; momenta not conserved?")
    return np.arccos(np.clip(cos_t, -1.0, 1.0))


def moller_velocity(p, q, c):
    """Moller velocity ``(c/4) g sqrt(s) / (p0 q0)``."""
    c = check_speed(c)
    g = relative_momentum(p, q, c)
    s = g * g + 4.0 * c * c
    return 0.25 * c * g * np.sqrt(s) / (_p0(p, c) * _p0(q, c))


def moller_velocity_from_velocities(p, q, c):
    """The velocity form ``(c/2) sqrt(|u-v|^2 - |u x v|^2)`` with u=p/p0, v=q/q0.

    In terms of ``p_hat = c u`` this is ``(1/2) sqrt(|p_hat-q_hat|^2 - |p_hat x q_hat|^2 / c^2)``.
    """
    u = p / _p0(p, c)[..., None]
    v = q / _p0(q, c)[..., None]
    rad = dot(u - v, u - v) - cross_norm(u, v) ** 2
    return 0.5 * c * np.sqrt(np.maximum(rad, 0.0))


def normalized_velocity(p, c):
    """``p_hat = c p / p0``, the particle velocity."""
    p = check_momentum(p)
    c = check_speed(c)
    return c * p / _p0(p, c)[..., None]


@dataclass(frozen=True)
class ConservationReport:
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)


def conservation_residual(p, q, p_out, q_out, c):
    """Energy-momentum defect scaled by ``p0 + q0`` (vectorised).

    For ``c = inf`` the Newtonian pair ``p+q`` and ``|p|^2+|q|^2`` is checked,
    scaled by ``|p|^2 + |q|^2 + 1``.
    """
    dp = np.max(np.abs(p_out + q_out - p - q), axis=-1)
    if np.isinf(c):
        e_in = dot(p, p) + dot(q, q)
        de = np.abs(dot(p_out, p_out) + dot(q_out, q_out) - e_in)
        return np.maximum(dp, de) / (e_in + 1.0)
    e_in = _p0(p, c) + _p0(q, c)
    # energies compared through their excess over rest energy to avoid c-sized cancellation
    k_in = dot(p, p) / (_p0(p, c) + c) + dot(q, q) / (_p0(q, c) + c)
    k_out = dot(p_out, p_out) / (_p0(p_out, c) + c) + dot(q_out, q_out) / (_p0(q_out, c) + c)
    return np.maximum(dp, np.abs(k_out - k_in)) / e_in


def check_conservation(event, tol: float = 1e-10) -> ConservationReport:
    """Residual report for a :class:`~relboltz.frames.ScatteringEvent`."""
    r = conservation_residual(event.p, event.q, event.p_out, event.q_out, event.c)
    return ConservationReport(residual=float(np.max(r)), tol=tol)
